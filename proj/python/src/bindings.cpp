#include "actor/applications.hpp"
#include "actor/config.hpp"
#include "actor/data.hpp"
#include "actor/error.hpp"
#include "actor/eval.hpp"
#include "actor/losses.hpp"
#include "actor/rotations.hpp"
#include "actor/training.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace actor;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// rotations [T, J, 6] + displacement [T, 3] -> Motion
body::Motion to_motion(const Array& rotations, const Array& displacement, int action, double fps) {
  if (rotations.ndim() != 3 || rotations.shape(2) != 6)
    throw Error(ErrorCode::ShapeMismatch, "rotations must have shape [T, J, 6]");
  if (displacement.ndim() != 2 || displacement.shape(1) != 3 || displacement.shape(0) != rotations.shape(0))
    throw Error(ErrorCode::ShapeMismatch, "displacement must have shape [T, 3]");
  auto r = rotations.unchecked<3>();
  auto d = displacement.unchecked<2>();
  body::Motion m;
  m.action = action;
  m.fps = fps;
  for (py::ssize_t t = 0; t < r.shape(0); ++t) {
    body::FramePose f;
    for (py::ssize_t j = 0; j < r.shape(1); ++j) {
      Eigen::Matrix<double, 6, 1> v;
      for (int k = 0; k < 6; ++k) v[k] = r(t, j, k);
      f.rotations.emplace_back(v);
    }
    f.displacement = rot::Vec3(d(t, 0), d(t, 1), d(t, 2));
    m.frames.push_back(std::move(f));
  }
  return m;
}

py::dict from_motion(const body::Motion& m) {
  const py::ssize_t t = m.length(), j = m.joint_count();
  Array rotations({t, j, py::ssize_t{6}});
  Array displacement({t, py::ssize_t{3}});
  auto r = rotations.mutable_unchecked<3>();
  auto d = displacement.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < t; ++i) {
    for (py::ssize_t k = 0; k < j; ++k)
      for (int c = 0; c < 6; ++c) r(i, k, c) = m.frames[i].rotations[k].values[c];
    for (int c = 0; c < 3; ++c) d(i, c) = m.frames[i].displacement[c];
  }
  py::dict out;
  out["rotations"] = rotations;
  out["displacement"] = displacement;
  out["action"] = m.action;
  out["fps"] = m.fps;
  return out;
}

// Applies a per-element conversion over the leading dimensions.
Array map_last(const Array& in, py::ssize_t in_width, std::vector<py::ssize_t> out_tail,
               const std::function<void(const double*, double*)>& fn) {
  if (in.ndim() < 1 || in.shape(in.ndim() - 1) != in_width)
    throw Error(ErrorCode::ShapeMismatch, "last dimension must be " + std::to_string(in_width));
  std::vector<py::ssize_t> shape(in.shape(), in.shape() + in.ndim() - 1);
  py::ssize_t out_width = 1;
  for (auto s : out_tail) out_width *= s;
  const py::ssize_t n = in.size() / in_width;
  shape.insert(shape.end(), out_tail.begin(), out_tail.end());
  Array out(shape);
  const double* src = in.data();
  double* dst = out.mutable_data();
  for (py::ssize_t i = 0; i < n; ++i) fn(src + i * in_width, dst + i * out_width);
  return out;
}

class Model {
 public:
  explicit Model(const std::filesystem::path& path) : ck_(training::load_checkpoint(path)) {}

  std::vector<std::string> action_names() const { return ck_.action_names; }
  std::string config_json() const { return config::to_json(ck_.model_config).dump(); }
  int64_t epoch() const { return ck_.epoch; }

  int action_index(const py::object& action) const {
    if (py::isinstance<py::int_>(action)) {
      const int a = action.cast<int>();
      if (a < 0 || a >= static_cast<int>(ck_.action_names.size()))
        throw Error(ErrorCode::UnknownAction, "action index out of range");
      return a;
    }
    const auto name = action.cast<std::string>();
    for (std::size_t i = 0; i < ck_.action_names.size(); ++i)
      if (ck_.action_names[i] == name) return static_cast<int>(i);
    throw Error(ErrorCode::UnknownAction, "unknown action '" + name + "'");
  }

  py::dict generate(const py::object& action, int duration, uint64_t seed, double fps) {
    const int a = action_index(action);
    body::Motion m;
    {
      py::gil_scoped_release release;
      auto gen = model::make_generator(seed);
      m = model::generate(ck_.model, a, duration, gen, fps);
    }
    return from_motion(m);
  }

  py::dict denoise(const Array& rotations, const Array& displacement, const py::object& action) {
    const int a = action_index(action);
    auto m = to_motion(rotations, displacement, a, 20.0);
    return from_motion(apps::denoise(ck_.model, m, a));
  }

  py::dict interpolate(const py::dict& m1, const py::dict& m2, const py::object& action, double alpha) {
    const int a = action_index(action);
    auto first = to_motion(m1["rotations"].cast<Array>(), m1["displacement"].cast<Array>(), a, 20.0);
    auto second = to_motion(m2["rotations"].cast<Array>(), m2["displacement"].cast<Array>(), a, 20.0);
    return from_motion(apps::interpolate_latent(ck_.model, first, second, a, alpha));
  }

 private:
  training::Checkpoint ck_;
};

}  // namespace

PYBIND11_MODULE(_actor, m) {
  m.doc() = "Action-conditioned motion generation core";

  // The exception object carries the error code name as `.code`.
  static PyObject* error_type = py::exception<Error>(m, "ActorError", PyExc_RuntimeError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("sixd_to_matrix", [](const Array& sixd) {
    return map_last(sixd, 6, {3, 3}, [](const double* in, double* out) {
      Eigen::Matrix<double, 6, 1> v = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(in);
      Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> dst(out);
      dst = rot::sixd_to_matrix(rot::Rot6D(v)).m;
    });
  }, py::arg("sixd"), "Gram-Schmidt 6D -> rotation matrix over the last axis ([..., 6] -> [..., 3, 3]).");

  m.def("matrix_to_sixd", [](const Array& mats) {
    if (mats.ndim() < 2 || mats.shape(mats.ndim() - 2) != 3)
      throw Error(ErrorCode::ShapeMismatch, "matrices must have shape [..., 3, 3]");
    std::vector<py::ssize_t> shape(mats.shape(), mats.shape() + mats.ndim() - 2);
    shape.push_back(9);
    Array rows = py::array(mats).attr("reshape")(shape);
    return map_last(rows, 9, {6}, [](const double* in, double* out) {
      rot::Mat3 r = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(in);
      Eigen::Map<Eigen::Matrix<double, 6, 1>> dst(out);
      dst = rot::matrix_to_sixd(rot::RotMatrix(r)).values;
    });
  }, py::arg("matrices"), "First two columns of each rotation matrix ([..., 3, 3] -> [..., 6]).");

  m.def("geodesic_distance", [](const rot::Mat3& a, const rot::Mat3& b) {
    return rot::geodesic_distance(rot::RotMatrix(a), rot::RotMatrix(b));
  }, py::arg("a"), py::arg("b"));

  m.def("kl_divergence", [](const std::vector<double>& mu, const std::vector<double>& logvar) {
    return losses::kl_loss(mu, logvar);
  }, py::arg("mu"), py::arg("logvar"), "KL(N(mu, exp(logvar)) || N(0, I)).");

  m.def("fid", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return eval::fid(a, b); }, py::arg("a"),
        py::arg("b"), "Frechet distance between Gaussian fits of two [N, F] feature sets.");

  m.def("forward_kinematics", [](const Array& rotations, const Array& displacement) {
    auto motion = to_motion(rotations, displacement, 0, 20.0);
    const auto sk = body::Skeleton::standard();
    Array out({static_cast<py::ssize_t>(motion.length()), static_cast<py::ssize_t>(sk.joint_count()), py::ssize_t{3}});
    auto o = out.mutable_unchecked<3>();
    for (int t = 0; t < motion.length(); ++t) {
      auto p = body::forward_kinematics(sk, motion.frames[t], true);
      for (int j = 0; j < sk.joint_count(); ++j)
        for (int c = 0; c < 3; ++c) o(t, j, c) = p[j][c];
    }
    return out;
  }, py::arg("rotations"), py::arg("displacement"), "World joint positions [T, 24, 3] on the standard skeleton.");

  m.def("jitter_score", [](const Array& rotations, const Array& displacement) {
    return apps::jitter_score(to_motion(rotations, displacement, 0, 20.0));
  }, py::arg("rotations"), py::arg("displacement"));

  m.def("builtin_actions", [] {
    std::vector<std::string> names;
    for (const auto& g : data::builtin_generators()) names.push_back(g.name);
    return names;
  });

  m.def("generate_dataset", [](const std::string& spec_json, const std::filesystem::path& out_dir) {
    auto spec = config::dataset_spec_from_json(config::json::parse(spec_json));
    data::save_dataset(data::generate_dataset(spec), out_dir);
  }, py::arg("spec_json"), py::arg("out_dir"));

  m.def("load_motion", [](const std::filesystem::path& path) { return from_motion(data::load_motion(path)); }, py::arg("path"));
  m.def("save_motion", [](const std::filesystem::path& path, const Array& rotations, const Array& displacement, int action,
                          double fps) { data::save_motion(to_motion(rotations, displacement, action, fps), path); },
        py::arg("path"), py::arg("rotations"), py::arg("displacement"), py::arg("action") = 0, py::arg("fps") = 20.0);

  py::class_<Model>(m, "Model")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def_property_readonly("action_names", &Model::action_names)
      .def_property_readonly("config_json", &Model::config_json)
      .def_property_readonly("epoch", &Model::epoch)
      .def("generate", &Model::generate, py::arg("action"), py::arg("duration") = 60, py::arg("seed") = 0,
           py::arg("fps") = 20.0)
      .def("denoise", &Model::denoise, py::arg("rotations"), py::arg("displacement"), py::arg("action"))
      .def("interpolate", &Model::interpolate, py::arg("m1"), py::arg("m2"), py::arg("action"), py::arg("alpha"));
}
