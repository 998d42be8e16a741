#include "sufgram/records.hpp"

#include <fstream>

#include <json.hpp>

namespace sufgram {

using nlohmann::json;

namespace {

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

Document parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("record is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kFormat, "record is not a JSON object");

  Document doc;
  if (auto it = j.find("id"); it != j.end()) doc.id = scalar_text(*it);
  if (auto it = j.find("doc_id"); it != j.end()) doc.id = scalar_text(*it);
  if (auto it = j.find("text"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::kFormat, "'text' must be a string");
    doc.text = it->get<std::string>();
  }
  if (auto it = j.find("token_ids"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kFormat, "'token_ids' must be an array");
    std::vector<TokenId> ids;
    ids.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number_integer() || v.get<long long>() < 0 ||
          v.get<long long>() > kMaxTokenId) {
        throw Error(ErrorCode::kFormat, "token id out of range [0, 65534]: " + v.dump());
      }
      ids.push_back(static_cast<TokenId>(v.get<long long>()));
    }
    doc.token_ids = std::move(ids);
  }
  for (const char* key : {"source", "subset"}) {
    if (auto it = j.find(key); it != j.end()) doc.source = scalar_text(*it);
  }
  if (auto it = j.find("metadata"); it != j.end()) {
    if (it->is_object() && doc.source.empty()) {
      for (const char* key : {"source", "subset"}) {
        if (auto s = it->find(key); s != it->end()) doc.source = scalar_text(*s);
      }
    }
    if (it->is_object()) {
      std::string line_out;
      for (auto kv = it->begin(); kv != it->end(); ++kv) {
        if (!line_out.empty()) line_out += ',';
        line_out += kv.key() + "=" + scalar_text(kv.value());
      }
      doc.metadata = one_line(std::move(line_out));
    } else {
      doc.metadata = one_line(scalar_text(*it));
    }
  }
  return doc;
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(Document&&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read records " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc;
    try {
      doc = parse_record(line);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    fn(std::move(doc));
  }
}

std::vector<Document> read_records(const std::filesystem::path& path) {
  std::vector<Document> docs;
  for_each_record(path, [&](Document&& d) { docs.push_back(std::move(d)); });
  return docs;
}

}  // namespace sufgram
