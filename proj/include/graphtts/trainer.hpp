#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphtts/corpus.hpp"
#include "graphtts/param_store.hpp"
#include "graphtts/tts_model.hpp"

namespace graphtts {

class DivergenceDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(const ParamStore& params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(ParamStore& params);
  std::size_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  ParamStore m_, v_;
};

struct TrainOptions {
  std::size_t steps = 1000;
  /// Stop once the batch loss (L1 + BCE) falls below this.
  double early_stop_loss = 1e-3;
  /// Optional extra stop once the mel L1 term alone falls below this.
  std::optional<double> early_stop_l1;
  /// steps_to_threshold records the first step with mel L1 below this.
  double l1_threshold = 0.01;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> report;
};

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double l1 = 0.0;
  double bce = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::uint64_t seed = 0;
  std::vector<StepRecord> trajectory;
  std::optional<std::size_t> steps_to_threshold;
  bool early_stopped = false;
  std::optional<std::filesystem::path> checkpoint;

  std::vector<double> losses() const;
  double median_seconds_per_step() const;
};

/// Full-batch training, one step at a time: each step averages the
/// teacher-forced loss over all utterances, then applies one Adam update.
/// Each record holds the loss measured before that step's update.
class Trainer {
 public:
  Trainer(TtsModel& model, const SyntheticCorpus& corpus, TrainOptions options);
  bool done() const;
  const StepRecord& step();
  const TrainReport& report() const { return report_; }
  /// Writes the checkpoint and report files if requested.
  TrainReport finish();

 private:
  TtsModel& model_;
  const SyntheticCorpus& corpus_;
  TrainOptions options_;
  Adam adam_;
  std::mt19937_64 dropout_rng_;
  std::vector<CharGraph> graphs_;
  TrainReport report_;
};

TrainReport train(TtsModel& model, const SyntheticCorpus& corpus, const TrainOptions& options);

/// Mean teacher-forced (loss, l1) over the corpus without updating anything.
std::pair<double, double> evaluate_corpus(const TtsModel& model, const SyntheticCorpus& corpus);

/// One JSON object per step, then a summary object.
std::string report_jsonl(const TrainReport& report);

struct IterBenchRow {
  std::size_t iter = 0;
  double seconds_per_step = 0.0;
  std::optional<std::size_t> steps_to_threshold;
  double final_l1 = 0.0;
  std::vector<double> losses;
};

/// Trains a fresh model per iter value (same seed, corpus and step budget),
/// each run stopping once the mel L1 falls below l1_threshold. Runs advance
/// in lockstep; seconds_per_step is the median over the steps all of them
/// took.
std::vector<IterBenchRow> bench_iter(const ModelConfig& config, const SyntheticCorpus& corpus,
                                     std::span<const std::size_t> iters, std::size_t steps,
                                     double l1_threshold);

}  // namespace graphtts
