#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "vernet/encoder.hpp"
#include "vernet/trainer.hpp"

namespace vernet {

// Flat key=value configuration; precedence is flag > file > default and the
// merge happens before a command runs.
class KvConfig {
 public:
  static KvConfig from_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

EncoderConfig encoder_config_from(const KvConfig& config, int vocab_size);
TrainConfig train_config_from(const KvConfig& config);

// Subcommand bodies; each returns a process exit code (0 success, 1 fatal,
// 2 partial failure).
int run_synth(const KvConfig& config, const std::string& out_path);
int run_annotate(const KvConfig& config, const std::string& in_path, const std::string& out_path);
int run_train(const KvConfig& config, const std::string& train_path,
              const std::optional<std::string>& dev_path, const std::string& checkpoint_path);
int run_score(const KvConfig& config, const std::string& checkpoint_path,
              const std::string& in_path, const std::string& out_path);
int run_rerank(const KvConfig& config, const std::string& in_path, const std::string& out_path,
               const std::optional<std::string>& weights_in,
               const std::optional<std::string>& weights_out);
int run_eval(const KvConfig& config, const std::string& in_path, const std::string& sys_path,
             const std::optional<std::string>& out_path);
int run_gradcheck(const KvConfig& config);

}  // namespace vernet
