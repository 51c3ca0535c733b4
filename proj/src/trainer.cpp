#include "graphtts/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

namespace graphtts {

Adam::Adam(const ParamStore& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, p] : params) {
    m_.add_zeros(name, p.value.shape());
    v_.add_zeros(name, p.value.shape());
  }
}

void Adam::step(ParamStore& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    Tensor& m = m_.value(name);
    Tensor& v = v_.value(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

std::vector<double> TrainReport::losses() const {
  std::vector<double> out;
  for (const auto& r : trajectory) out.push_back(r.loss);
  return out;
}

double TrainReport::median_seconds_per_step() const {
  if (trajectory.empty()) return 0.0;
  std::vector<double> s;
  for (const auto& r : trajectory) s.push_back(r.seconds);
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2), s.end());
  return s[s.size() / 2];
}

namespace {

std::vector<CharGraph> corpus_graphs(const TtsModel& model, const SyntheticCorpus& corpus) {
  std::vector<CharGraph> graphs;
  for (const auto& u : corpus.utterances) graphs.push_back(build_graph(u.text, model.vocab()));
  return graphs;
}

}  // namespace

std::pair<double, double> evaluate_corpus(const TtsModel& model, const SyntheticCorpus& corpus) {
  if (corpus.utterances.empty()) throw std::invalid_argument("evaluate_corpus: empty corpus");
  ParamStore& store = const_cast<ParamStore&>(model.params());
  double loss = 0.0, l1 = 0.0;
  for (const auto& u : corpus.utterances) {
    Tape tape(GradMode::kDisabled);
    auto b = model.bind(tape, store);
    LossTerms terms = model.utterance_loss(b, build_graph(u.text, model.vocab()), u.mel, nullptr);
    loss += terms.total.value()[0];
    l1 += terms.l1.value()[0];
  }
  const double n = static_cast<double>(corpus.utterances.size());
  return {loss / n, l1 / n};
}

Trainer::Trainer(TtsModel& model, const SyntheticCorpus& corpus, TrainOptions options)
    : model_(model),
      corpus_(corpus),
      options_(std::move(options)),
      adam_(model.params(), model.config().learning_rate),
      dropout_rng_(model.config().seed ^ 0x9e3779b97f4a7c15ull) {
  if (corpus.utterances.empty()) throw std::invalid_argument("train: corpus is empty");
  graphs_ = corpus_graphs(model, corpus);
  report_.seed = model.config().seed;
}

bool Trainer::done() const { return report_.early_stopped || report_.trajectory.size() >= options_.steps; }

const StepRecord& Trainer::step() {
  if (done()) throw std::logic_error("Trainer::step called after training finished");
  const auto start = std::chrono::steady_clock::now();
  const double inv_n = 1.0 / static_cast<double>(graphs_.size());
  std::mt19937_64* drop = model_.config().prenet_dropout > 0.0 ? &dropout_rng_ : nullptr;
  ParamStore& params = model_.params();
  params.zero_grad();
  StepRecord rec;
  rec.step = report_.trajectory.size();
  for (std::size_t i = 0; i < graphs_.size(); ++i) {
    Tape tape;
    auto b = model_.bind(tape);
    LossTerms terms = model_.utterance_loss(b, graphs_[i], corpus_.utterances[i].mel, drop);
    rec.loss += terms.total.value()[0] * inv_n;
    rec.l1 += terms.l1.value()[0] * inv_n;
    rec.bce += terms.bce.value()[0] * inv_n;
    tape.backward(ops::scale(terms.total, inv_n));
  }
  if (!std::isfinite(rec.loss)) {
    throw DivergenceDetected("non-finite loss at step " + std::to_string(rec.step));
  }
  const bool stop = rec.loss < options_.early_stop_loss ||
                    (options_.early_stop_l1 && rec.l1 < *options_.early_stop_l1);
  if (!report_.steps_to_threshold && rec.l1 < options_.l1_threshold) report_.steps_to_threshold = rec.step;
  if (!stop) adam_.step(params);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report_.trajectory.push_back(rec);
  report_.early_stopped = stop;
  return report_.trajectory.back();
}

TrainReport Trainer::finish() {
  if (options_.checkpoint) {
    model_.save(*options_.checkpoint);
    report_.checkpoint = options_.checkpoint;
  }
  if (options_.report) {
    std::ofstream out(*options_.report, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + options_.report->string());
    out << report_jsonl(report_);
  }
  return report_;
}

TrainReport train(TtsModel& model, const SyntheticCorpus& corpus, const TrainOptions& options) {
  Trainer trainer(model, corpus, options);
  while (!trainer.done()) trainer.step();
  return trainer.finish();
}

std::string report_jsonl(const TrainReport& report) {
  std::ostringstream out;
  for (const auto& r : report.trajectory) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["loss"] = r.loss;
    j["l1"] = r.l1;
    j["bce"] = r.bce;
    j["seconds"] = r.seconds;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["summary"] = true;
  summary["seed"] = report.seed;
  summary["steps"] = report.trajectory.size();
  summary["early_stopped"] = report.early_stopped;
  summary["steps_to_threshold"] =
      report.steps_to_threshold ? nlohmann::json(*report.steps_to_threshold) : nlohmann::json(nullptr);
  summary["checkpoint"] = report.checkpoint ? nlohmann::json(report.checkpoint->string()) : nlohmann::json(nullptr);
  out << summary.dump() << '\n';
  return out.str();
}

std::vector<IterBenchRow> bench_iter(const ModelConfig& config, const SyntheticCorpus& corpus,
                                     std::span<const std::size_t> iters, std::size_t steps,
                                     double l1_threshold) {
  const Vocab vocab = Vocab::from_texts(corpus.texts());
  std::vector<std::unique_ptr<TtsModel>> models;
  std::vector<std::unique_ptr<Trainer>> trainers;
  for (std::size_t iter : iters) {
    if (iter < 1) throw std::invalid_argument("bench_iter: iter values must be >= 1");
    ModelConfig c = config;
    c.iter = iter;
    models.push_back(std::make_unique<TtsModel>(c, vocab));
    TrainOptions opts;
    opts.steps = steps;
    opts.early_stop_loss = 0.0;
    opts.early_stop_l1 = l1_threshold;
    opts.l1_threshold = l1_threshold;
    trainers.push_back(std::make_unique<Trainer>(*models.back(), corpus, opts));
  }
  // Round-robin so that machine load drifts hit every iter value alike.
  std::size_t shared = 0;
  for (bool any = true; any;) {
    any = false;
    bool all = true;
    for (auto& t : trainers) {
      if (t->done()) {
        all = false;
        continue;
      }
      t->step();
      any = true;
    }
    if (all && any) ++shared;
  }
  std::vector<IterBenchRow> rows;
  for (std::size_t k = 0; k < trainers.size(); ++k) {
    const TrainReport& rep = trainers[k]->report();
    IterBenchRow row;
    row.iter = iters[k];
    std::vector<double> secs;
    for (std::size_t s = 0; s < shared; ++s) secs.push_back(rep.trajectory[s].seconds);
    if (!secs.empty()) {
      std::nth_element(secs.begin(), secs.begin() + static_cast<std::ptrdiff_t>(secs.size() / 2), secs.end());
      row.seconds_per_step = secs[secs.size() / 2];
    }
    row.steps_to_threshold = rep.steps_to_threshold;
    row.final_l1 = rep.trajectory.empty() ? 0.0 : rep.trajectory.back().l1;
    row.losses = rep.losses();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace graphtts
