#include "mwlab/characteristics.hpp"
#include "mwlab/error.hpp"
#include "mwlab/io.hpp"
#include "mwlab/norms.hpp"
#include "mwlab/operators.hpp"
#include "mwlab/orlicz.hpp"
#include "mwlab/reducing.hpp"
#include "mwlab/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace mwlab;

namespace {

GridSpec make_grid(int d, int L) {
  GridSpec g{d, L, {0, 0}};
  g.validate();
  return g;
}

// (N, n, n) array of the cell matrices.
py::array_t<double> cells_array(const MatrixField& f) {
  const auto n = static_cast<py::ssize_t>(f.n());
  py::array_t<double> out({static_cast<py::ssize_t>(f.size()), n, n});
  auto view = out.mutable_unchecked<3>();
  for (std::size_t c = 0; c < f.size(); ++c)
    for (py::ssize_t i = 0; i < n; ++i)
      for (py::ssize_t j = 0; j < n; ++j) view(static_cast<py::ssize_t>(c), i, j) = f[c](i, j);
  return out;
}

std::vector<Mat> cells_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                            const GridSpec& grid) {
  if (a.ndim() != 3 || a.shape(1) != a.shape(2)) throw ParameterError("expected an (N, n, n) array");
  if (static_cast<std::size_t>(a.shape(0)) != grid.cell_count())
    throw ParameterError("array has " + std::to_string(a.shape(0)) + " cells, grid has " +
                         std::to_string(grid.cell_count()));
  auto view = a.unchecked<3>();
  std::vector<Mat> cells;
  for (py::ssize_t c = 0; c < a.shape(0); ++c) {
    Mat m(a.shape(1), a.shape(2));
    for (py::ssize_t i = 0; i < a.shape(1); ++i)
      for (py::ssize_t j = 0; j < a.shape(2); ++j) m(i, j) = view(c, i, j);
    cells.push_back(m);
  }
  return cells;
}

py::dict characteristic_dict(const Characteristic& c) {
  py::dict d("quantity"_a = to_string(c.kind), "value"_a = c.value, "slack"_a = c.slack);
  if (c.argmax) {
    std::vector<int> anchor(c.argmax->anchor.begin(), c.argmax->anchor.begin() + c.argmax->grid.d);
    d["argmax"] = py::dict("level"_a = c.argmax->level, "anchor"_a = anchor);
  } else {
    d["argmax"] = py::none();
  }
  return d;
}

py::dict estimate_dict(const OpNormEstimate& e) {
  return py::dict("estimate"_a = e.estimate, "lower"_a = e.lower, "witness"_a = e.witness.flatten(),
                  "exact"_a = e.exact, "flagged"_a = e.flagged, "restarts"_a = e.restarts,
                  "converged_restarts"_a = e.converged_restarts, "iterations"_a = e.iterations);
}

OpNormOptions options(int restarts, std::uint64_t seed) {
  OpNormOptions o;
  o.restarts = restarts;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_mwlab, m) {
  m.doc() = "Matrix-weighted fractional commutator laboratory";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DegeneracyError>(m, "DegeneracyError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<ExponentTriple>(m, "Exponents")
      .def(py::init([](double alpha, double q, int d) { return ExponentTriple::from_alpha_q(alpha, q, d); }),
           "alpha"_a, "q"_a, "d"_a = 1)
      .def_readonly("p", &ExponentTriple::p)
      .def_readonly("q", &ExponentTriple::q)
      .def_readonly("alpha", &ExponentTriple::alpha)
      .def_readonly("d", &ExponentTriple::d)
      .def_property_readonly("p_conj", &ExponentTriple::p_conj)
      .def("dual", &ExponentTriple::dual)
      .def("__repr__", &ExponentTriple::describe);

  py::class_<MatrixField>(m, "MatrixField")
      .def_static(
          "weight", [](int d, int L, const py::array_t<double>& cells) {
            const GridSpec g = make_grid(d, L);
            auto c = cells_from(cells, g);
            const int n = static_cast<int>(c.front().rows());
            return MatrixField::weight(g, n, std::move(c));
          },
          "d"_a, "L"_a, "cells"_a)
      .def_static(
          "symbol", [](int d, int L, const py::array_t<double>& cells) {
            const GridSpec g = make_grid(d, L);
            auto c = cells_from(cells, g);
            const int n = static_cast<int>(c.front().rows());
            return MatrixField::symbol(g, n, std::move(c));
          },
          "d"_a, "L"_a, "cells"_a)
      .def_property_readonly("n", &MatrixField::n)
      .def_property_readonly("d", [](const MatrixField& f) { return f.grid().d; })
      .def_property_readonly("L", [](const MatrixField& f) { return f.grid().L; })
      .def_property_readonly("kind", [](const MatrixField& f) { return to_string(f.kind()); })
      .def("cells", &cells_array)
      .def("__len__", &MatrixField::size);

  m.def(
      "generate_weight",
      [](std::uint64_t seed, int d, int L, int n, const std::string& family, double log_bound) {
        WeightParams params;
        params.log_bound = log_bound;
        return generate_weight(seed, make_grid(d, L), n, family, params).field;
      },
      "seed"_a, "d"_a, "L"_a, "n"_a, "family"_a = "log-bounded-random", "log_bound"_a = 1.0);
  m.def(
      "generate_symbol",
      [](std::uint64_t seed, int d, int L, int n, const std::string& family, double amplitude) {
        return generate_symbol(seed, make_grid(d, L), n, family, amplitude);
      },
      "seed"_a, "d"_a, "L"_a, "n"_a, "family"_a = "random", "amplitude"_a = 1.0);

  m.def("load_field", &load_field, "path"_a);
  m.def("save_field", &save_field, "path"_a, "field"_a);

  m.def(
      "apq", [](const MatrixField& w, const ExponentTriple& e) { return characteristic_dict(apq_characteristic(w, e)); },
      "w"_a, "e"_a);
  m.def(
      "bmo",
      [](const MatrixField& u, const MatrixField& v, const MatrixField& b, const ExponentTriple& e,
         const std::string& quantity) {
        if (quantity == "classic") return characteristic_dict(bmo_classic(u, v, b, e));
        if (quantity == "tilde") return characteristic_dict(tilde_bmo(v, u, b, e));
        if (quantity == "dual") return characteristic_dict(dual_tilde_bmo(u, v, b, e));
        if (quantity.size() == 3 && quantity.rfind("jn", 0) == 0)
          return characteristic_dict(jn_quantity(quantity[2] - '0', u, v, b, e));
        throw ParameterError("unknown quantity '" + quantity + "'");
      },
      "u"_a, "v"_a, "b"_a, "e"_a, "quantity"_a = "tilde");

  m.def(
      "reduce",
      [](const MatrixField& w, double r, double power) {
        const ReducingMatrix rm = reduce(w, all_cells(w.grid()), r, power);
        return py::dict("A"_a = rm.A, "distortion"_a = rm.distortion, "mode"_a = to_string(rm.mode));
      },
      "w"_a, "r"_a, "power"_a);

  m.def("ialpha_unit_kernel", [](int d, double alpha, int m0, int m1) {
    return ialpha_unit_kernel(d, alpha, Coords{m0, m1});
  }, "d"_a, "alpha"_a, "m0"_a, "m1"_a = 0);

  m.def(
      "opnorm",
      [](const std::string& op, const MatrixField& u, const MatrixField& v, const ExponentTriple& e,
         const std::optional<MatrixField>& b, int restarts, std::uint64_t seed) {
        const GridSpec grid = u.grid();
        OperatorMatrix t;
        if (op == "identity")
          t = build_identity(grid, u.n());
        else if (op == "ialpha")
          t = build_ialpha(grid, e, u.n());
        else if (op == "avg")
          t = build_averaging(all_cells(grid), e, u.n());
        else if (op == "commutator") {
          if (!b) throw ParameterError("commutator needs b");
          t = build_commutator(build_ialpha(grid, e, u.n()), *b);
        } else {
          throw ParameterError("unknown operator '" + op + "'");
        }
        return estimate_dict(opnorm(t, u, v, e, options(restarts, seed)));
      },
      "op"_a, "u"_a, "v"_a, "e"_a, "b"_a = py::none(), "restarts"_a = 32, "seed"_a = 0);

  m.def(
      "mixed_opnorm",
      [](const Mat& k, double p, double q, int restarts, std::uint64_t seed) {
        // k acts on the cells of a d = 1 grid with scalar blocks
        const auto cells = static_cast<std::size_t>(k.cols());
        int L = 0;
        while ((std::size_t{1} << L) < cells) ++L;
        if ((std::size_t{1} << L) != cells || k.rows() != k.cols())
          throw ParameterError("expected a square matrix of power-of-two size");
        OperatorMatrix t{make_grid(1, L), 1, OperatorKind::product, k, 0.0};
        return estimate_dict(mixed_opnorm(t, p, q, options(restarts, seed)));
      },
      "k"_a, "p"_a, "q"_a, "restarts"_a = 32, "seed"_a = 0);

  m.def(
      "luxemburg",
      [](const std::vector<double>& values, const std::string& phi) {
        return luxemburg(values, YoungFunction::parse(phi));
      },
      "values"_a, "phi"_a);
  m.def(
      "luxemburg_star",
      [](const std::vector<double>& values, const std::string& phi) {
        return luxemburg_star(values, YoungFunction::parse(phi));
      },
      "values"_a, "phi"_a);
  m.def(
      "bump_constants",
      [](const MatrixField& u, const MatrixField& v, const MatrixField& b, const ExponentTriple& e,
         const std::string& c, const std::string& d) {
        const BumpConstants k = orlicz_bump_constants(u, v, b, e, YoungFunction::parse(c), YoungFunction::parse(d));
        return py::make_tuple(k.kappa1, k.kappa2);
      },
      "u"_a, "v"_a, "b"_a, "e"_a, "C"_a, "D"_a);

  m.def("suite_names", &suite_names);
  m.def(
      "run_suite",
      [](const std::string& name, const std::string& config_json) {
        const BatchConfig cfg = config_json.empty() ? BatchConfig{} : parse_batch_config(config_json);
        py::gil_scoped_release release;
        return run_suite(name, cfg).to_json();
      },
      "name"_a, "config_json"_a = "");
}
