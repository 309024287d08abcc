#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>

#include "fslab/json_io.hpp"

namespace py = pybind11;
using namespace fslab;

namespace {

CMatrix from_np(py::handle obj) {
  auto a = py::array_t<cd, py::array::c_style | py::array::forcecast>::ensure(obj);
  if (!a || a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  CMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.a.data(), a.data(), sizeof(cd) * m.rows * m.cols);
  return m;
}

py::array_t<cd> to_np(const CMatrix& m) {
  py::array_t<cd> a({m.rows, m.cols});
  std::memcpy(a.mutable_data(), m.a.data(), sizeof(cd) * m.rows * m.cols);
  return a;
}

std::vector<std::string> issues(const Report& rep) { return rep.issues; }

Section section_from_list(const Action& act, const std::vector<py::object>& mats) {
  if (static_cast<int>(mats.size()) != act.G->n_arrows)
    throw std::invalid_argument("expected one fibre entry per arrow");
  Section s;
  s.reserve(mats.size());
  for (const auto& m : mats) s.push_back(from_np(m));
  return s;
}

ESection esection_from_dict(const Correspondence& e, const py::dict& d, bool arrows) {
  const FiniteGroupoid& g = *e.src->G;
  ESection s(g.n_arrows);
  for (int t = 0; t < g.n_arrows; ++t) {
    if (!arrows && !g.is_unit(t)) continue;
    const int base = arrows ? g.src[t] : t;
    s[t] = CMatrix::zero(e.d_at(base), e.nb(base));
  }
  for (const auto& item : d) {
    const int t = py::cast<int>(item.first);
    if (t < 0 || t >= g.n_arrows) throw std::invalid_argument("arrow index out of range");
    if (s[t].rows == 0 && s[t].cols == 0)
      throw std::invalid_argument("section entry at a non-unit arrow");
    const CMatrix m = from_np(item.second);
    if (m.rows != s[t].rows || m.cols != s[t].cols)
      throw std::invalid_argument("section entry has the wrong shape");
    s[t] = m;
  }
  return s;
}

FSPresentation presentation(std::shared_ptr<Correspondence> e, const py::dict& xi,
                            const py::dict& zeta) {
  FSPresentation p;
  p.e = e;
  p.xi = esection_from_dict(*e, xi, false);
  p.zeta = esection_from_dict(*e, zeta, false);
  return p;
}

}  // namespace

PYBIND11_MODULE(_fslab, mod) {
  mod.doc() = "finite-scale multipliers of twisted groupoid actions";

  py::class_<FiniteGroupoid, std::shared_ptr<FiniteGroupoid>>(mod, "Groupoid")
      .def_readonly("n_arrows", &FiniteGroupoid::n_arrows)
      .def_readonly("units", &FiniteGroupoid::units)
      .def_readonly("src", &FiniteGroupoid::src)
      .def_readonly("rng", &FiniteGroupoid::rng)
      .def_readonly("inv", &FiniteGroupoid::inv)
      .def("compose", &FiniteGroupoid::compose)
      .def("inverse", &FiniteGroupoid::inverse)
      .def("is_unit", &FiniteGroupoid::is_unit)
      .def("validate", [](const FiniteGroupoid& g) { return issues(validate(g)); })
      .def("to_json",
           [](const FiniteGroupoid& g) { return groupoid_to_json(g).dump(2); })
      .def_static("group",
                  [](const std::vector<std::vector<int>>& table) {
                    return std::make_shared<FiniteGroupoid>(build_group(table));
                  })
      .def_static("pair_groupoid",
                  [](int n) { return std::make_shared<FiniteGroupoid>(build_pair_groupoid(n)); })
      .def_static("action_groupoid",
                  [](const std::vector<std::vector<int>>& table,
                     const std::vector<std::vector<int>>& perms) {
                    return std::make_shared<FiniteGroupoid>(build_action_groupoid(table, perms));
                  });

  py::class_<Action, std::shared_ptr<Action>>(mod, "Action")
      .def_property_readonly(
          "groupoid",
          [](const Action& a) { return std::const_pointer_cast<FiniteGroupoid>(a.G); })
      .def_property_readonly("dims",
                             [](const Action& a) {
                               std::vector<int> out;
                               for (int x : a.G->units) out.push_back(a.A.at(x));
                               return out;
                             })
      .def("fibre_dim", &Action::fibre_dim)
      .def("v", [](const Action& a, int g) { return to_np(a.V[g]); })
      .def("u", [](const Action& a, int g, int h) { return to_np(a.cocycle(g, h)); })
      .def("alpha", [](const Action& a, int g, py::handle m) { return to_np(a.alpha(g, from_np(m))); })
      .def("with_v",
           [](const Action& a, int g, py::handle m) {
             auto out = std::make_shared<Action>(a);
             out->V.at(g) = from_np(m);
             return out;
           })
      .def("with_twist",
           [](const Action& a, int g, int h, py::handle m) {
             auto out = std::make_shared<Action>(a);
             out->u[pair_key(g, h)] = from_np(m);
             return out;
           })
      .def("validate",
           [](const Action& a, double tol) { return issues(validate_action(a, tol)); },
           py::arg("tol") = 1e-9)
      .def("to_json", [](const Action& a) { return action_to_json(a).dump(2); })
      .def_static("trivial",
                  [](std::shared_ptr<FiniteGroupoid> g, const std::vector<int>& dims) {
                    return std::make_shared<Action>(trivial_action(std::move(g), dims));
                  })
      .def_static("load", [](const std::string& path) {
        JsonLoader loader(std::filesystem::current_path());
        return std::const_pointer_cast<Action>(loader.action(json(path)));
      });

  py::class_<Correspondence, std::shared_ptr<Correspondence>>(mod, "Correspondence")
      .def_property_readonly(
          "source",
          [](const Correspondence& e) { return std::const_pointer_cast<Action>(e.src); })
      .def_property_readonly(
          "target",
          [](const Correspondence& e) { return std::const_pointer_cast<Action>(e.tgt); })
      .def("d_at", &Correspondence::d_at)
      .def("k_at", &Correspondence::k_at)
      .def("w", [](const Correspondence& e, int x) { return to_np(e.W[x]); })
      .def("p", [](const Correspondence& e, int g) { return to_np(e.P[g]); })
      .def("validate",
           [](const Correspondence& e, double tol) {
             return issues(validate_correspondence(e, tol));
           },
           py::arg("tol") = 1e-9)
      .def("regularized",
           [](const Correspondence& e) { return std::make_shared<Correspondence>(regularize(e)); })
      .def("to_json", [](const Correspondence& e) { return correspondence_to_json(e).dump(2); })
      .def_static("identity", [](std::shared_ptr<Action> act) {
        return std::make_shared<Correspondence>(identity_correspondence(std::move(act)));
      });

  py::class_<Multiplier>(mod, "Multiplier")
      .def_property_readonly(
          "source", [](const Multiplier& m) { return std::const_pointer_cast<Action>(m.src); })
      .def_property_readonly(
          "target", [](const Multiplier& m) { return std::const_pointer_cast<Action>(m.dst); })
      .def("t", [](const Multiplier& m, int g) { return to_np(m.T[g]); })
      .def("with_t",
           [](const Multiplier& m, int g, py::handle mat) {
             Multiplier out = m;
             const CMatrix t = from_np(mat);
             if (t.rows != out.T.at(g).rows || t.cols != out.T.at(g).cols)
               throw std::invalid_argument("coefficient block has the wrong shape");
             out.T[g] = t;
             return out;
           })
      .def("apply", [](const Multiplier& m, int g, py::handle a) {
        return to_np(m.apply(g, from_np(a)));
      })
      .def("support", [](const Multiplier& m, double tol) { return support(m, tol); },
           py::arg("tol") = 0.0)
      .def("dagger", [](const Multiplier& m) { return dagger(m); })
      .def("__matmul__",
           [](const Multiplier& s, const Multiplier& t) { return compose(s, t); })
      .def("validate", [](const Multiplier& m) { return issues(validate_multiplier(m)); })
      .def("is_positive_definite",
           [](const Multiplier& m, double tol) { return is_positive_definite(m, tol); },
           py::arg("tol") = 1e-9)
      .def("fs_norm",
           [](const Multiplier& m, const std::string& mode, double tol) {
             if (mode == "pd") return fs_norm(m, FsMode::positive_definite, tol);
             if (mode == "general") return fs_norm(m, FsMode::general, tol);
             throw std::invalid_argument("mode must be \"pd\" or \"general\"");
           },
           py::arg("mode") = "pd", py::arg("tol") = 1e-9)
      .def("dec_norm",
           [](const Multiplier& m, double tol_bisect, double tol_feas, int max_iter,
              std::uint64_t seed) {
             const DecResult r = dec_norm(m, tol_bisect, tol_feas, max_iter, seed);
             py::dict out;
             out["lo"] = r.lo;
             out["hi"] = r.hi;
             out["value"] = r.value();
             out["converged"] = r.converged;
             out["residual"] = r.residual;
             return out;
           },
           py::arg("tol_bisect") = 1e-4, py::arg("tol_feas") = 1e-7, py::arg("max_iter") = 4000,
           py::arg("seed") = 0)
      .def("dilate",
           [](const Multiplier& m, double tol) {
             const FSPresentation p = dilate(m, tol);
             py::dict xi;
             for (int x : m.src->G->units) xi[py::int_(x)] = to_np(p.xi[x]);
             return py::make_tuple(std::const_pointer_cast<Correspondence>(p.e), xi);
           },
           py::arg("tol") = 1e-9)
      .def("to_json", [](const Multiplier& m) { return multiplier_to_json(m).dump(2); })
      .def_static("load", [](const std::string& path) {
        JsonLoader loader(std::filesystem::current_path());
        return loader.multiplier(json(path));
      });

  mod.def("identity_multiplier",
          [](std::shared_ptr<Action> act) { return identity_multiplier(std::move(act)); });
  mod.def("zero_multiplier", [](std::shared_ptr<Action> src, std::shared_ptr<Action> dst) {
    return zero_multiplier(std::move(src), std::move(dst));
  });
  mod.def("herz_schur", [](std::shared_ptr<Action> act, const std::vector<cd>& phi) {
    return herz_schur(std::move(act), phi);
  });
  mod.def("is_positive_type",
          [](const FiniteGroupoid& g, const std::vector<cd>& phi, double tol) {
            return is_positive_type(g, phi, tol);
          },
          py::arg("groupoid"), py::arg("phi"), py::arg("tol") = 1e-9);
  mod.def("exel_multiplier", [](std::shared_ptr<Action> act, const std::vector<py::object>& xi,
                                const std::vector<py::object>& zeta) {
    const Section sx = section_from_list(*act, xi);
    const Section sz = section_from_list(*act, zeta);
    return exel_multiplier(std::move(act), sx, sz);
  });
  mod.def("fs_coefficient",
          [](std::shared_ptr<Correspondence> e, const py::dict& xi, const py::dict& zeta) {
            return fs_coefficient(presentation(std::move(e), xi, zeta));
          });
  mod.def("fourier_coefficient",
          [](std::shared_ptr<Correspondence> e, const py::dict& xi, const py::dict& zeta) {
            ESection sx = esection_from_dict(*e, xi, true);
            ESection sz = esection_from_dict(*e, zeta, true);
            return fourier_coefficient(std::move(e), sx, sz);
          });
}
