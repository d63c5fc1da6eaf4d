#include "serc/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace serc {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

// Returns the string value and the index one past its closing quote.
std::pair<std::string, std::size_t> parse_string(std::string_view s, int line) {
  std::string out;
  for (std::size_t i = 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"') return {out, i + 1};
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i >= s.size()) break;
    switch (s[i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default: fail(line, std::string("unsupported escape '\\") + s[i] + "'");
    }
  }
  fail(line, "unterminated string");
}

TomlValue parse_value(std::string_view raw, int line) {
  if (raw.empty()) fail(line, "missing value");
  if (raw.front() == '"') {
    auto [value, end] = parse_string(raw, line);
    auto rest = trim(raw.substr(end));
    if (!rest.empty() && rest.front() != '#') fail(line, "unexpected text after string");
    return value;
  }
  auto hash = raw.find('#');
  auto token = trim(raw.substr(0, hash));
  if (token == "true") return true;
  if (token == "false") return false;
  std::string digits;
  for (char c : token)
    if (c != '_') digits += c;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
  if (ec == std::errc() && p == digits.data() + digits.size()) return i;
  double d = 0;
  auto [p2, ec2] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (ec2 == std::errc() && p2 == digits.data() + digits.size()) return d;
  fail(line, "unsupported value '" + token + "'");
}

struct Reader {
  const std::string& section;
  const std::string& key;
  const TomlValue& value;

  std::string where() const { return "[" + section + "] " + key; }

  double number() const {
    if (auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&value)) return *d;
    throw ConfigError(where() + " must be a number");
  }
  std::int64_t integer() const {
    if (auto* i = std::get_if<std::int64_t>(&value)) return *i;
    throw ConfigError(where() + " must be an integer");
  }
  bool boolean() const {
    if (auto* b = std::get_if<bool>(&value)) return *b;
    throw ConfigError(where() + " must be true or false");
  }
  std::string string() const {
    if (auto* s = std::get_if<std::string>(&value)) return *s;
    throw ConfigError(where() + " must be a string");
  }
  int count() const {
    auto v = integer();
    if (v < 0 || v > 1'000'000'000) throw ConfigError(where() + " is out of range");
    return static_cast<int>(v);
  }
};

using Setter = std::function<void(const Reader&, Settings&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = [] {
    std::map<std::string, std::map<std::string, Setter>> m;
    auto& b = m["backend"];
    b["kind"] = [](const Reader& r, Settings& s) {
      s.backend = r.string();
      if (s.backend != "oracle" && s.backend != "remote") throw ConfigError(r.where() + " must be oracle or remote");
    };
    b["chat_base_url"] = [](const Reader& r, Settings& s) { s.remote.chat_base_url = r.string(); };
    b["model_name"] = [](const Reader& r, Settings& s) { s.remote.model_name = r.string(); };
    b["temperature_main"] = [](const Reader& r, Settings& s) { s.remote.temperature_main = r.number(); };
    b["temperature_polish"] = [](const Reader& r, Settings& s) { s.remote.temperature_polish = r.number(); };
    b["max_new_tokens"] = [](const Reader& r, Settings& s) { s.remote.max_new_tokens = r.count(); };
    b["retriever_base_url"] = [](const Reader& r, Settings& s) { s.remote.retriever_base_url = r.string(); };
    b["retriever_top_k"] = [](const Reader& r, Settings& s) { s.remote.retriever_top_k = r.count(); };
    b["context_char_cap"] = [](const Reader& r, Settings& s) { s.remote.context_char_cap = r.count(); };
    b["request_timeout"] = [](const Reader& r, Settings& s) { s.remote.request_timeout = r.number(); };
    b["max_retries"] = [](const Reader& r, Settings& s) { s.remote.max_retries = r.count(); };
    b["retry_backoff_ms"] = [](const Reader& r, Settings& s) { s.remote.retry_backoff_ms = r.count(); };
    b["max_in_flight"] = [](const Reader& r, Settings& s) { s.remote.max_in_flight = r.count(); };
    b["summary_char_cap"] = [](const Reader& r, Settings& s) { s.remote.summary_char_cap = r.count(); };
    b["chat_api_key_env"] = [](const Reader& r, Settings& s) { s.remote.chat_api_key_env = r.string(); };

    auto& rt = m["retriever"];
    rt["base_url"] = b["retriever_base_url"];
    rt["top_k"] = b["retriever_top_k"];
    rt["context_char_cap"] = b["context_char_cap"];
    rt["search_depth"] = [](const Reader& r, Settings& s) { s.remote.search_depth = r.string(); };
    rt["api_key_env"] = [](const Reader& r, Settings& s) { s.remote.search_api_key_env = r.string(); };

    auto& p = m["pipeline"];
    p["density"] = [](const Reader& r, Settings& s) {
      try {
        s.pipeline.density = parse_density(r.string());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(r.where() + ": " + e.what());
      }
    };
    p["firewall_enabled"] = [](const Reader& r, Settings& s) { s.pipeline.firewall_enabled = r.boolean(); };
    p["rag_enabled"] = [](const Reader& r, Settings& s) { s.pipeline.rag_enabled = r.boolean(); };
    p["max_sentences"] = [](const Reader& r, Settings& s) { s.pipeline.max_sentences = r.count(); };
    p["parallel_checks"] = [](const Reader& r, Settings& s) { s.pipeline.parallel_checks = r.count(); };
    p["max_group_size"] = [](const Reader& r, Settings& s) { s.pipeline.max_group_size = r.count(); };

    auto& n = m["noise"];
    n["p_entity_swap"] = [](const Reader& r, Settings& s) { s.episode.noise.p_entity_swap = r.number(); };
    n["p_corrupt"] = [](const Reader& r, Settings& s) { s.episode.noise.p_corrupt = r.number(); };
    n["p_fabricate"] = [](const Reader& r, Settings& s) { s.episode.noise.p_fabricate = r.number(); };
    n["seed"] = [](const Reader& r, Settings& s) {
      auto v = r.integer();
      if (v < 0) throw ConfigError(r.where() + " must be >= 0");
      s.seed = static_cast<std::uint64_t>(v);
    };
    n["mixed"] = [](const Reader& r, Settings& s) { s.episode.mixed_noise = r.boolean(); };
    n["n_sentences"] = [](const Reader& r, Settings& s) { s.episode.n_sentences = r.count(); };
    n["facts_per_sentence"] = [](const Reader& r, Settings& s) { s.episode.facts_per_sentence = r.count(); };
    return m;
  }();
  return s;
}

}  // namespace

TomlTable parse_toml(std::string_view text) {
  TomlTable table;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      auto close = s.find(']');
      if (close == std::string::npos) fail(line, "unterminated section header");
      auto rest = trim(std::string_view(s).substr(close + 1));
      if (!rest.empty() && rest.front() != '#') fail(line, "unexpected text after section header");
      section = trim(std::string_view(s).substr(1, close - 1));
      if (!bare_key(section)) fail(line, "invalid section name '" + section + "'");
      table[section];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    auto key = trim(std::string_view(s).substr(0, eq));
    if (!bare_key(key)) fail(line, "invalid key '" + key + "'");
    if (section.empty()) fail(line, "key '" + key + "' appears before any section");
    auto& sec = table[section];
    if (sec.count(key)) fail(line, "duplicate key '" + key + "'");
    sec[key] = parse_value(trim(std::string_view(s).substr(eq + 1)), line);
  }
  return table;
}

void apply_settings(const TomlTable& table, Settings& settings) {
  const auto& sch = schema();
  for (const auto& [section, keys] : table) {
    auto sec = sch.find(section);
    if (sec == sch.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : keys) {
      auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("unknown config key [" + section + "] " + key);
      setter->second(Reader{section, key, value}, settings);
    }
  }
  try {
    settings.remote.validate();
    settings.pipeline.validate();
    settings.episode.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Settings parse_settings(std::string_view text) {
  Settings s;
  apply_settings(parse_toml(text), s);
  return s;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_settings(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace serc
