#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sufgram/common.hpp"

namespace sufgram {

/// One line of a newline-delimited JSON corpus dump. Recognized fields:
/// `text`, `metadata` (string or flat object), `id`/`doc_id`, and
/// `token_ids` (array of integers, used instead of `text` when present),
/// and `subset`/`source` (top level or inside a metadata object) for
/// per-source statistics.
struct Document {
  std::string id;
  std::string source;
  std::string text;
  std::string metadata;
  std::optional<std::vector<TokenId>> token_ids;
};

Document parse_record(std::string_view line);

/// Calls `fn` for every non-blank line. Parse errors name the line number.
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(Document&&)>& fn);

std::vector<Document> read_records(const std::filesystem::path& path);

}  // namespace sufgram
