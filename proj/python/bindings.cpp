#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <sstream>

#include "lguided/checkpoint.hpp"
#include "lguided/cli.hpp"
#include "lguided/dataset.hpp"
#include "lguided/gradcheck.hpp"
#include "lguided/matrix.hpp"
#include "lguided/model.hpp"
#include "lguided/rng.hpp"
#include "lguided/synth.hpp"
#include "lguided/trainer.hpp"
#include "lguided/vocab.hpp"

namespace py = pybind11;
using namespace lguided;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw UsageError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + m.size(), m.data.begin());
  return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

py::dict metrics_dict(const Metrics& m, const std::vector<std::string>& labels) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["correct"] = m.correct;
  d["total"] = m.total;
  d["loss_mean"] = m.loss_mean;
  py::dict per_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    py::dict entry;
    entry["precision"] = m.precision[i];
    entry["recall"] = m.recall[i];
    per_class[py::str(labels[i])] = entry;
  }
  d["per_class"] = per_class;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lguided, m) {
  m.doc() = "label-guided text classification core";

  py::register_exception<UsageError>(m, "UsageError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");

  m.def("softmax", [](const std::vector<double>& v) { return softmax(v); },
        "numerically stable softmax");
  m.def("relu",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
          return from_matrix(relu(to_matrix(a)));
        });
  m.def("matmul",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
          return from_matrix(matmul(to_matrix(a), to_matrix(b)));
        });
  m.def("cosine_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return cosine_similarity(a, b);
        });
  m.def("tokenize", [](const std::string& s) { return tokenize(s); });

  m.def(
      "synth_corpus_tsv",
      [](const std::string& dir, std::size_t num_labels, std::size_t docs_per_class,
         std::size_t vocab_per_class, std::size_t doc_len, double noise_rate,
         double overlap, std::uint64_t seed) {
        SynthSpec spec;
        spec.num_labels = num_labels;
        spec.docs_per_class = docs_per_class;
        spec.vocab_per_class = vocab_per_class;
        spec.doc_len = doc_len;
        spec.noise_rate = noise_rate;
        spec.overlap = overlap;
        SeededRng rng(seed);
        const Dataset data = synth_corpus(rng, spec);
        std::filesystem::create_directories(dir);
        write_tsv_split(dir + "/train.tsv", data.train);
        write_tsv_split(dir + "/test.tsv", data.test);
        py::dict d;
        d["train_docs"] = data.train.size();
        d["test_docs"] = data.test.size();
        d["labels"] = data.labels;
        return d;
      },
      py::arg("dir"), py::arg("num_labels") = 2, py::arg("docs_per_class") = 50,
      py::arg("vocab_per_class") = 20, py::arg("doc_len") = 20,
      py::arg("noise_rate") = 0.0, py::arg("overlap") = 0.0, py::arg("seed") = 1);

  m.def(
      "evaluate_checkpoint",
      [](const std::string& checkpoint, const std::string& data_dir,
         const std::string& split) {
        const Model model = load_checkpoint(checkpoint);
        const Dataset data = load_dataset(data_dir, model.hp.max_len);
        const auto& docs = split == "train" ? data.train
                           : split == "dev" ? data.dev
                                            : data.test;
        return metrics_dict(evaluate(model, docs), model.labels);
      },
      py::arg("checkpoint"), py::arg("data_dir"), py::arg("split") = "test");

  m.def(
      "gradient_check_toy",
      [](std::uint64_t seed) {
        HyperParams hp;
        hp.embed_dim = 3;
        hp.hidden = 3;
        hp.label_dim = 6;
        hp.protos = 2;
        hp.seed = seed;
        SeededRng rng(seed);
        Vocabulary vocab;
        for (const char* tok : {"alpha", "beta", "gamma", "delta"}) vocab.add(tok);
        Model model = build_model(hp, vocab, {"neg", "pos"}, rng);
        Document doc{"d0", {"alpha", "beta", "gamma", "delta"}, "pos"};
        SeededRng pick(seed + 1);
        return gradient_check(model, doc, nullptr, 1e-5, 200, pick).max_rel_err;
      },
      py::arg("seed") = 1);

  // The full command-line surface, in-process.
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
