#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "norad/metrics.hpp"
#include "norad/rectify.hpp"
#include "norad/synth.hpp"
#include "norad/trainer.hpp"

namespace py = pybind11;
using namespace norad;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<std::size_t> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[i] = static_cast<std::size_t>(a.shape(i));
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
  return out;
}

EdgeList edges_from_list(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  EdgeList edges(pairs.begin(), pairs.end());
  return canonical_edges(std::move(edges));
}

}  // namespace

PYBIND11_MODULE(_norad, m) {
  m.doc() = "Spike-and-slab variational graph autoencoder with blockmodel edge decoding";

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("t_e", &TrainConfig::t_e)
      .def_readwrite("t_m", &TrainConfig::t_m)
      .def_readwrite("outer_rounds", &TrainConfig::outer_rounds)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("k", &TrainConfig::k)
      .def_readwrite("d_prime", &TrainConfig::d_prime)
      .def_readwrite("d_dprime", &TrainConfig::d_dprime)
      .def_readwrite("temp_start", &TrainConfig::temp_start)
      .def_readwrite("temp_floor", &TrainConfig::temp_floor)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("pos_weight_mode", &TrainConfig::pos_weight_mode)
      .def_readwrite("l2_normalize", &TrainConfig::l2_normalize)
      .def_readwrite("soft_m_step", &TrainConfig::soft_m_step);

  m.def(
      "train",
      [](const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
         const TrainConfig& cfg) {
        AttributedGraph g;
        g.features = tensor_from_array(features);
        g.n = g.features.rows();
        g.edges = edges_from_list(edges);
        Trainer trainer(g, g.edges, cfg);
        FitResult result = trainer.fit();
        py::dict out;
        out["z"] = array_from_tensor(result.z);
        out["B"] = array_from_tensor(result.params.get("B").tensor);
        out["eta"] = array_from_tensor(result.vparams.eta);
        out["mu"] = array_from_tensor(result.vparams.mu);
        out["final_elbo"] = result.final_elbo;
        out["rounds_run"] = result.rounds_run;
        return out;
      },
      py::arg("edges"), py::arg("features"), py::arg("config") = TrainConfig{},
      "Fit the model on an undirected attributed graph; returns the learned "
      "representation, blockmodel, and variational parameters.");

  m.def(
      "score_edges",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
        EdgeList e(edges.begin(), edges.end());
        return score_edges(tensor_from_array(z), tensor_from_array(b), e);
      },
      py::arg("z"), py::arg("B"), py::arg("edges"));

  m.def("roc_auc", &roc_auc, py::arg("scores"), py::arg("labels"));
  m.def("average_precision", &average_precision, py::arg("scores"), py::arg("labels"));
  m.def("hits_at_k", &hits_at_k, py::arg("pos_scores"), py::arg("neg_scores"), py::arg("k"));
  m.def("nmi", &nmi, py::arg("a"), py::arg("b"));
  m.def("hungarian_accuracy", &hungarian_accuracy, py::arg("pred"), py::arg("truth"));
  m.def(
      "kmeans",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
         std::size_t k, std::uint64_t seed) {
        ClusterAssignment c = kmeans(tensor_from_array(points), k, seed);
        return py::make_tuple(c.assign, c.inertia);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def(
      "rectify",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& t,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& u,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& wq,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& wk,
         const std::vector<std::uint32_t>& targets, double epsilon, std::size_t iterations,
         bool preserve_mask) {
        AtnParams atn{tensor_from_array(t), tensor_from_array(u), tensor_from_array(wq),
                      tensor_from_array(wk)};
        RectifyConfig cfg;
        cfg.epsilon = epsilon;
        cfg.iterations = iterations;
        cfg.targets = targets;
        cfg.preserve_mask = preserve_mask;
        RectifyResult result = rectify(tensor_from_array(z), tensor_from_array(features), atn, cfg);
        py::list traces;
        for (const NodeRectifyTrace& tr : result.traces) {
          py::dict d;
          d["node"] = tr.node;
          d["ll"] = tr.ll;
          d["aborted"] = tr.aborted;
          traces.append(d);
        }
        py::dict out;
        out["z"] = array_from_tensor(result.z);
        out["traces"] = traces;
        return out;
      },
      py::arg("z"), py::arg("features"), py::arg("T"), py::arg("U"), py::arg("Wq"), py::arg("Wk"),
      py::arg("targets"), py::arg("epsilon") = 0.001, py::arg("iterations") = 50,
      py::arg("preserve_mask") = false,
      "Gradient-ascent refinement of selected representation rows against the "
      "attribute decoder's log-likelihood.");

  m.def(
      "generate_synthetic",
      [](std::size_t n, std::size_t k, double delta, double diag, double offdiag,
         std::size_t attr_dim, bool community_blind, std::uint64_t seed) {
        SynthPreset preset;
        preset.n = n;
        preset.k = k;
        preset.delta = delta;
        preset.diag = diag;
        preset.offdiag = offdiag;
        preset.attr_dim = attr_dim;
        preset.community_blind = community_blind;
        PlantedInstance inst = generate_preset(preset, seed);
        py::dict out;
        out["edges"] = inst.graph.edges;
        out["features"] = array_from_tensor(inst.graph.features);
        out["labels"] = inst.labels;
        out["z_true"] = array_from_tensor(inst.z_true);
        out["b_true"] = array_from_tensor(inst.b_true);
        return out;
      },
      py::arg("n") = 200, py::arg("k") = 4, py::arg("delta") = 0.3, py::arg("diag") = 4.0,
      py::arg("offdiag") = -4.0, py::arg("attr_dim") = 64, py::arg("community_blind") = false,
      py::arg("seed") = 0,
      "Sample an attributed graph from the model's own generative process.");
}
