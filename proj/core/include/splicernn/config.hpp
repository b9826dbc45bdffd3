#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splicernn/model.hpp"
#include "splicernn/trainer.hpp"

namespace splicernn {

// Flat key=value configuration text: one pair per line, '#' starts a
// comment, blank lines are ignored, duplicate keys are rejected.
struct KeyValueText {
  std::vector<std::pair<std::string, std::string>> entries;

  static KeyValueText parse(std::istream& in);
  static KeyValueText parse_string(const std::string& text);
  static KeyValueText load(const std::string& path);

  const std::string* find(const std::string& key) const;
  void set(const std::string& key, const std::string& value);  // upsert
};

// locale-independent shortest round-trip formatting
std::string format_double(double v);
std::string format_bool(bool v);

// Full run description: model + training + file locations. All randomness
// derives from the single `seed` key.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string train_data;
  std::string out_dir;

  // defaults -> file -> overrides; unknown keys are rejected and every
  // offending key is reported in one error
  static RunConfig from_kv(const KeyValueText& kv);
  static RunConfig load(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& overrides = {});

  // resolved echo: every key explicit, re-parsable into the identical run
  std::string to_text() const;
};

// model-config codec shared with the checkpoint format
std::string model_config_to_text(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);

}  // namespace splicernn
