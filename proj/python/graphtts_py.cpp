#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "graphtts/corpus.hpp"
#include "graphtts/gradcheck.hpp"
#include "graphtts/trainer.hpp"

namespace py = pybind11;
using namespace graphtts;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Vocab vocab_for(const std::string& text, const std::optional<std::u32string>& symbols) {
  if (symbols) return Vocab::from_symbols(*symbols);
  const std::vector<std::string> texts{text};
  return Vocab::from_texts(texts);
}

CorpusConfig corpus_config(const std::optional<std::string>& json) {
  return json ? CorpusConfig::from_json(*json) : CorpusConfig{};
}

py::dict step_dict(const StepRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["loss"] = r.loss;
  d["l1"] = r.l1;
  d["bce"] = r.bce;
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_graphtts, m) {
  py::register_exception<UnknownSymbol>(m, "UnknownSymbol", PyExc_ValueError);
  py::register_exception<EmptyGraph>(m, "EmptyGraph", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConfigMismatch>(m, "ConfigMismatch", PyExc_RuntimeError);

  m.def(
      "graph_json",
      [](const std::string& text, std::optional<std::u32string> symbols) {
        return serialize_graph(build_graph(text, vocab_for(text, symbols)));
      },
      py::arg("text"), py::arg("symbols") = py::none());
  m.def(
      "graph_dot",
      [](const std::string& text, std::optional<std::u32string> symbols) {
        return export_dot(build_graph(text, vocab_for(text, symbols)));
      },
      py::arg("text"), py::arg("symbols") = py::none());

  m.def(
      "corpus_jsonl",
      [](std::optional<std::string> config, std::uint64_t seed) {
        return corpus_to_jsonl(gen_corpus(corpus_config(config), seed));
      },
      py::arg("config") = py::none(), py::arg("seed") = 0);

  m.def(
      "gradcheck",
      [](std::optional<std::string> config, std::uint64_t seed, double eps) {
        const ModelConfig c = config ? ModelConfig::from_json(*config) : toy_config();
        const GradcheckReport rep = run_gradcheck(c, seed, eps);
        return py::make_tuple(rep.max_error, rep.table());
      },
      py::arg("config") = py::none(), py::arg("seed") = 0, py::arg("eps") = 1e-5);

  py::class_<TtsModel>(m, "Model")
      .def(py::init([](const std::string& config, const std::u32string& symbols) {
             return TtsModel(ModelConfig::from_json(config), Vocab::from_symbols(symbols));
           }),
           py::arg("config"), py::arg("symbols"))
      .def_static("load", &TtsModel::load, py::arg("path"))
      .def("save", &TtsModel::save, py::arg("path"))
      .def_property_readonly("config", [](const TtsModel& m) { return m.config().to_json(); })
      .def(
          "train",
          [](TtsModel& model, std::optional<std::string> corpus, std::uint64_t corpus_seed, std::size_t steps,
             std::optional<double> early_stop_l1) {
            const SyntheticCorpus c = gen_corpus(corpus_config(corpus), corpus_seed);
            TrainOptions opts;
            opts.steps = steps;
            opts.early_stop_l1 = early_stop_l1;
            TrainReport rep;
            {
              py::gil_scoped_release release;
              rep = train(model, c, opts);
            }
            py::list out;
            for (const auto& r : rep.trajectory) out.append(step_dict(r));
            return out;
          },
          py::arg("corpus") = py::none(), py::arg("corpus_seed") = 0, py::arg("steps") = 1000,
          py::arg("early_stop_l1") = py::none())
      .def(
          "synth",
          [](const TtsModel& model, const std::string& text, std::optional<std::size_t> max_steps) {
            const SynthesisResult r = model.synthesize(build_graph(text, model.vocab()), max_steps);
            py::dict d;
            d["mel"] = to_numpy(r.mel.frames);
            d["attention"] = r.attention.weights;
            d["steps"] = r.steps;
            d["stop_step"] = r.stop_step;
            d["max_steps_reached"] = r.max_steps_reached;
            return d;
          },
          py::arg("text"), py::arg("max_steps") = py::none());
}
