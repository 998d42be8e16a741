#include "sufgram/manifest.hpp"

#include <charconv>
#include <fstream>

#include "sufgram/common.hpp"

namespace sufgram {

std::string shard_file_name(std::size_t k) {
  return "table." + std::to_string(k) + ".bin";
}

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kFormat,
                "manifest: bad integer for '" + key + "': '" + value + "'");
  }
  return out;
}

}  // namespace

Manifest Manifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read manifest " + path.string());

  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kFormat, "manifest: malformed line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  auto take = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw Error(ErrorCode::kFormat,
                  "manifest " + path.string() + ": missing key '" + key + "'");
    }
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  Manifest m;
  m.version = static_cast<int>(parse_u64("version", take("version")));
  if (m.version != kFormatVersion) {
    throw Error(ErrorCode::kFormat,
                "manifest: unsupported version " + std::to_string(m.version));
  }
  m.tokenizer = take("tokenizer");
  m.tokens = parse_u64("N", take("N"));
  m.documents = parse_u64("D", take("D"));

  for (std::size_t k = 0;; ++k) {
    std::string prefix = "shard." + std::to_string(k) + ".";
    if (!kv.count(prefix + "path")) break;
    ShardDescriptor s;
    s.path = take(prefix + "path");
    s.tokens = parse_u64(prefix + "N", take(prefix + "N"));
    s.width = static_cast<int>(parse_u64(prefix + "P", take(prefix + "P")));
    s.start = parse_u64(prefix + "start", take(prefix + "start"));
    s.end = parse_u64(prefix + "end", take(prefix + "end"));
    m.shards.push_back(std::move(s));
  }

  for (auto& [key, value] : kv) {
    if (key.rfind("shard.", 0) == 0) {
      throw Error(ErrorCode::kFormat, "manifest: dangling shard key '" + key + "'");
    }
    m.params.emplace(key, value);
  }
  return m;
}

void Manifest::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << "version=" << version << '\n'
        << "tokenizer=" << tokenizer << '\n'
        << "N=" << tokens << '\n'
        << "D=" << documents << '\n';
    for (std::size_t k = 0; k < shards.size(); ++k) {
      const auto& s = shards[k];
      std::string p = "shard." + std::to_string(k) + ".";
      out << p << "path=" << s.path << '\n'
          << p << "N=" << s.tokens << '\n'
          << p << "P=" << s.width << '\n'
          << p << "start=" << s.start << '\n'
          << p << "end=" << s.end << '\n';
    }
    for (const auto& [key, value] : params) out << key << '=' << value << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sufgram
