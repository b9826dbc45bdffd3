#include "splicernn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "splicernn/errors.hpp"

namespace splicernn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
  return s.substr(a, b - a);
}

// collects problems so a bad config reports every offending key at once
struct FieldReader {
  const KeyValueText& kv;
  std::vector<std::string> problems;
  std::vector<std::string> known_keys;

  explicit FieldReader(const KeyValueText& kv_) : kv(kv_) {}

  void fail(const std::string& key, const std::string& msg) {
    problems.push_back(key + ": " + msg);
  }

  template <class F>
  void field(const std::string& key, F&& apply) {
    known_keys.push_back(key);
    const std::string* raw = kv.find(key);
    if (!raw) return;
    try {
      apply(*raw);
    } catch (const ValidationError& e) {
      fail(key, e.what());
    }
  }

  void finish(const std::string& what) {
    for (const auto& [key, value] : kv.entries) {
      bool known = false;
      for (const std::string& k : known_keys)
        if (k == key) { known = true; break; }
      if (!known) problems.push_back(key + ": unknown key");
    }
    if (!problems.empty()) {
      std::string msg = what + ":";
      for (const std::string& p : problems) msg += "\n  " + p;
      throw ValidationError(msg);
    }
  }
};

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("expected a number, got '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("expected a non-negative integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError("expected true|false, got '" + s + "'");
}

std::vector<std::size_t> parse_layer_list(const std::string& s) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string part =
        trim(comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start));
    const std::int64_t v = parse_int(part);
    if (v <= 0) throw ValidationError("layer sizes must be positive, got '" + part + "'");
    sizes.push_back(static_cast<std::size_t>(v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

std::string layer_list_to_string(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sizes[i]);
  }
  return out;
}

void read_model_fields(FieldReader& r, ModelConfig& m) {
  r.field("cell", [&](const std::string& v) { m.cell_kind = cell_kind_from_name(v); });
  r.field("layers", [&](const std::string& v) { m.layer_sizes = parse_layer_list(v); });
  r.field("classes", [&](const std::string& v) {
    m.num_classes = static_cast<std::size_t>(parse_int(v));
  });
  r.field("window", [&](const std::string& v) {
    m.window_length = static_cast<std::size_t>(parse_int(v));
  });
  r.field("dropout", [&](const std::string& v) { m.dropout_rate = parse_double(v); });
  r.field("irnn_scale", [&](const std::string& v) { m.irnn_scale = parse_double(v); });
  r.field("one_hot", [&](const std::string& v) { m.one_hot_input = parse_bool(v); });
  r.field("seed", [&](const std::string& v) { m.seed = parse_u64(v); });
}

void write_model_fields(std::ostream& out, const ModelConfig& m) {
  out << "cell = " << cell_kind_name(m.cell_kind) << '\n';
  out << "layers = " << layer_list_to_string(m.layer_sizes) << '\n';
  out << "classes = " << m.num_classes << '\n';
  out << "window = " << m.window_length << '\n';
  out << "dropout = " << format_double(m.dropout_rate) << '\n';
  out << "irnn_scale = " << format_double(m.irnn_scale) << '\n';
  out << "one_hot = " << format_bool(m.one_hot_input) << '\n';
  out << "seed = " << m.seed << '\n';
}

}  // namespace

KeyValueText KeyValueText::parse(std::istream& in) {
  KeyValueText kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config: empty key at line " + std::to_string(line_no));
    if (kv.find(key))
      throw ValidationError("config: duplicate key '" + key + "' at line " +
                            std::to_string(line_no));
    kv.entries.emplace_back(key, value);
  }
  return kv;
}

KeyValueText KeyValueText::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

KeyValueText KeyValueText::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    return parse(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

const std::string* KeyValueText::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

void KeyValueText::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries)
    if (k == key) {
      v = value;
      return;
    }
  entries.emplace_back(key, value);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

RunConfig RunConfig::from_kv(const KeyValueText& kv) {
  RunConfig cfg;
  FieldReader r(kv);

  read_model_fields(r, cfg.model);
  r.field("epochs", [&](const std::string& v) { cfg.train.epochs = static_cast<int>(parse_int(v)); });
  r.field("batch", [&](const std::string& v) {
    cfg.train.batch_size = static_cast<int>(parse_int(v));
  });
  r.field("optimizer", [&](const std::string& v) {
    cfg.train.optimizer.kind = optimizer_kind_from_name(v);
  });
  r.field("alpha", [&](const std::string& v) { cfg.train.optimizer.alpha = parse_double(v); });
  r.field("beta1", [&](const std::string& v) { cfg.train.optimizer.beta1 = parse_double(v); });
  r.field("beta2", [&](const std::string& v) { cfg.train.optimizer.beta2 = parse_double(v); });
  r.field("rho", [&](const std::string& v) { cfg.train.optimizer.rho = parse_double(v); });
  r.field("epsilon", [&](const std::string& v) { cfg.train.optimizer.epsilon = parse_double(v); });
  r.field("clip_norm", [&](const std::string& v) { cfg.train.clip_norm = parse_double(v); });
  r.field("shuffle", [&](const std::string& v) { cfg.train.shuffle = parse_bool(v); });
  r.field("threads", [&](const std::string& v) {
    cfg.train.threads = static_cast<int>(parse_int(v));
  });
  r.field("train_data", [&](const std::string& v) { cfg.train_data = v; });
  r.field("out_dir", [&](const std::string& v) { cfg.out_dir = v; });

  // one seed and one dropout rate govern the whole run
  cfg.train.seed = cfg.model.seed;
  cfg.train.dropout_rate = cfg.model.dropout_rate;

  try {
    cfg.model.validate();
  } catch (const ValidationError& e) {
    r.problems.push_back(e.what());
  }
  try {
    cfg.train.validate();
  } catch (const ValidationError& e) {
    r.problems.push_back(e.what());
  }
  r.finish("invalid configuration");
  return cfg;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  KeyValueText kv = KeyValueText::load(path);
  for (const auto& [key, value] : overrides) kv.set(key, value);
  return from_kv(kv);
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "# resolved configuration (all defaults explicit)\n";
  out << "# architecture: " << kEmbeddingDim;
  for (const std::size_t h : model.layer_sizes) out << '-' << h;
  out << '-' << model.num_classes << '\n';
  write_model_fields(out, model);
  out << "epochs = " << train.epochs << '\n';
  out << "batch = " << train.batch_size << '\n';
  out << "optimizer = " << optimizer_kind_name(train.optimizer.kind) << '\n';
  out << "alpha = " << format_double(train.optimizer.alpha) << '\n';
  out << "beta1 = " << format_double(train.optimizer.beta1) << '\n';
  out << "beta2 = " << format_double(train.optimizer.beta2) << '\n';
  out << "rho = " << format_double(train.optimizer.rho) << '\n';
  out << "epsilon = " << format_double(train.optimizer.epsilon) << '\n';
  out << "clip_norm = " << format_double(train.clip_norm) << '\n';
  out << "shuffle = " << format_bool(train.shuffle) << '\n';
  out << "threads = " << train.threads << '\n';
  out << "train_data = " << train_data << '\n';
  out << "out_dir = " << out_dir << '\n';
  return out.str();
}

std::string model_config_to_text(const ModelConfig& config) {
  std::ostringstream out;
  write_model_fields(out, config);
  return out.str();
}

ModelConfig model_config_from_text(const std::string& text) {
  const KeyValueText kv = KeyValueText::parse_string(text);
  ModelConfig m;
  FieldReader r(kv);
  read_model_fields(r, m);
  try {
    m.validate();
  } catch (const ValidationError& e) {
    r.problems.push_back(e.what());
  }
  r.finish("invalid model configuration");
  return m;
}

}  // namespace splicernn
