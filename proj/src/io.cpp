#include "mwlab/io.hpp"

#include "mwlab/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mwlab {

namespace {

constexpr int kDigits = 17;

void write_schema(std::ostream& os, const char* schema) { os << schema << ' ' << kArtifactVersion << '\n'; }

void read_schema(std::istream& is, const std::string& expected) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("missing schema line (expected '" + expected + "')");
  std::istringstream ls(line);
  std::string name;
  int version = 0;
  if (!(ls >> name >> version) || name != expected)
    throw FormatError("schema line '" + line + "' does not name " + expected);
  if (version != kArtifactVersion)
    throw FormatError(expected + ": unsupported version " + std::to_string(version));
}

// Header tokens "key value key value ...", keys in a fixed order.
class Header {
 public:
  explicit Header(std::istream& is) {
    if (!std::getline(is, line_)) throw FormatError("missing header line");
    ls_.str(line_);
  }
  std::string text(const std::string& key) {
    std::string k, v;
    if (!(ls_ >> k >> v) || k != key) throw FormatError("header '" + line_ + "': expected key '" + key + "'");
    return v;
  }
  int integer(const std::string& key) {
    const std::string v = text(key);
    try {
      std::size_t used = 0;
      const int out = std::stoi(v, &used);
      if (used == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw FormatError("header key '" + key + "': bad integer '" + v + "'");
  }
  double real(const std::string& key) {
    const std::string v = text(key);
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw FormatError("header key '" + key + "': bad number '" + v + "'");
  }
  GridSpec grid_with_shift(int d, int L) {
    std::string k;
    GridSpec g{d, L, {0, 0}};
    if (!(ls_ >> k) || k != "shift" || !(ls_ >> g.shift[0] >> g.shift[1]))
      throw FormatError("header '" + line_ + "': expected 'shift s0 s1'");
    try {
      g.validate();
    } catch (const ParameterError& e) {
      throw FormatError(std::string("header grid: ") + e.what());
    }
    return g;
  }
  void finish() {
    std::string extra;
    if (ls_ >> extra) throw FormatError("header '" + line_ + "': unexpected token '" + extra + "'");
  }

 private:
  std::string line_;
  std::istringstream ls_;
};

// One line with exactly `count` finite numbers.
std::vector<double> read_row(std::istream& is, std::size_t count, const std::string& what) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(what + ": unexpected end of file");
  std::istringstream ls(line);
  std::vector<double> out;
  out.reserve(count);
  std::string tok;
  while (ls >> tok) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw FormatError(what + ": bad number '" + tok + "'");
    }
  }
  if (out.size() != count)
    throw FormatError(what + ": expected " + std::to_string(count) + " numbers, found " + std::to_string(out.size()));
  return out;
}

void expect_end(std::istream& is, const std::string& what) {
  std::string line;
  while (std::getline(is, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw FormatError(what + ": trailing content");
}

void write_grid(std::ostream& os, const GridSpec& g, int n) { os << "d " << g.d << " L " << g.L << " n " << n; }

void write_shift(std::ostream& os, const GridSpec& g) { os << " shift " << g.shift[0] << ' ' << g.shift[1]; }

ReducingMode reducing_mode_from_string(const std::string& s) {
  for (ReducingMode m : {ReducingMode::exact_r2, ReducingMode::scalar, ReducingMode::mvee})
    if (to_string(m) == s) return m;
  throw FormatError("unknown reducing mode '" + s + "'");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_field(std::ostream& os, const MatrixField& f) {
  write_schema(os, "mwlab-field");
  write_grid(os, f.grid(), f.n());
  os << " kind " << to_string(f.kind());
  write_shift(os, f.grid());
  os << '\n' << std::setprecision(kDigits);
  for (const Mat& m : f.cells()) {
    for (int i = 0; i < f.n(); ++i)
      for (int j = 0; j < f.n(); ++j) os << (i || j ? " " : "") << m(i, j);
    os << '\n';
  }
}

MatrixField read_field(std::istream& is) {
  read_schema(is, "mwlab-field");
  Header h(is);
  const int d = h.integer("d");
  const int L = h.integer("L");
  const int n = h.integer("n");
  if (n < 1) throw FormatError("field: n must be >= 1");
  const FieldKind kind = field_kind_from_string(h.text("kind"));
  const GridSpec g = h.grid_with_shift(d, L);
  h.finish();
  std::vector<Mat> cells;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto row = read_row(is, static_cast<std::size_t>(n * n), "field cell " + std::to_string(c));
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(i * n + j)];
    cells.push_back(std::move(m));
  }
  expect_end(is, "field");
  return kind == FieldKind::weight ? MatrixField::weight(g, n, std::move(cells))
                                   : MatrixField::symbol(g, n, std::move(cells));
}

void write_vector(std::ostream& os, const VectorField& v) {
  write_schema(os, "mwlab-vector");
  write_grid(os, v.grid, v.n);
  write_shift(os, v.grid);
  os << '\n' << std::setprecision(kDigits);
  for (const Vec& x : v.values) {
    for (int i = 0; i < v.n; ++i) os << (i ? " " : "") << x(i);
    os << '\n';
  }
}

VectorField read_vector(std::istream& is) {
  read_schema(is, "mwlab-vector");
  Header h(is);
  const int d = h.integer("d");
  const int L = h.integer("L");
  const int n = h.integer("n");
  if (n < 1) throw FormatError("vector: n must be >= 1");
  const GridSpec g = h.grid_with_shift(d, L);
  h.finish();
  VectorField out = VectorField::zeros(g, n);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto row = read_row(is, static_cast<std::size_t>(n), "vector cell " + std::to_string(c));
    for (int i = 0; i < n; ++i) out.values[c](i) = row[static_cast<std::size_t>(i)];
  }
  expect_end(is, "vector");
  return out;
}

void write_operator(std::ostream& os, const OperatorMatrix& t) {
  write_schema(os, "mwlab-operator");
  write_grid(os, t.grid, t.n);
  os << " kind " << to_string(t.kind);
  write_shift(os, t.grid);
  os << std::setprecision(kDigits) << " quad_error " << t.quad_error << '\n';
  for (Eigen::Index i = 0; i < t.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.entries.cols(); ++j) os << (j ? " " : "") << t.entries(i, j);
    os << '\n';
  }
}

OperatorMatrix read_operator(std::istream& is) {
  read_schema(is, "mwlab-operator");
  Header h(is);
  const int d = h.integer("d");
  const int L = h.integer("L");
  const int n = h.integer("n");
  if (n < 1) throw FormatError("operator: n must be >= 1");
  OperatorMatrix out;
  out.n = n;
  out.kind = operator_kind_from_string(h.text("kind"));
  out.grid = h.grid_with_shift(d, L);
  out.quad_error = h.real("quad_error");
  h.finish();
  const auto dim = static_cast<Eigen::Index>(out.grid.cell_count()) * n;
  out.entries.resize(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto row = read_row(is, static_cast<std::size_t>(dim), "operator row " + std::to_string(i));
    for (Eigen::Index j = 0; j < dim; ++j) out.entries(i, j) = row[static_cast<std::size_t>(j)];
  }
  expect_end(is, "operator");
  return out;
}

void write_reducing(std::ostream& os, const ReducingMatrix& m) {
  write_schema(os, "mwlab-reducing");
  os << std::setprecision(kDigits) << "n " << m.A.rows() << " mode " << to_string(m.mode) << " distortion "
     << m.distortion << " r " << m.r << " samples " << m.sample_count << " iterations " << m.iterations
     << " tolerance " << m.options.tolerance << " max_iterations " << m.options.max_iterations << " directions "
     << m.options.directions << '\n';
  for (Eigen::Index i = 0; i < m.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.A.cols(); ++j) os << (j ? " " : "") << m.A(i, j);
    os << '\n';
  }
}

ReducingMatrix read_reducing(std::istream& is) {
  read_schema(is, "mwlab-reducing");
  Header h(is);
  ReducingMatrix out;
  const int n = h.integer("n");
  if (n < 1) throw FormatError("reducing: n must be >= 1");
  out.mode = reducing_mode_from_string(h.text("mode"));
  out.distortion = h.real("distortion");
  out.r = h.real("r");
  out.sample_count = h.integer("samples");
  out.iterations = h.integer("iterations");
  out.options.tolerance = h.real("tolerance");
  out.options.max_iterations = h.integer("max_iterations");
  out.options.directions = h.integer("directions");
  h.finish();
  out.A.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const auto row = read_row(is, static_cast<std::size_t>(n), "reducing row " + std::to_string(i));
    for (int j = 0; j < n; ++j) out.A(i, j) = row[static_cast<std::size_t>(j)];
  }
  expect_end(is, "reducing");
  return out;
}

ArtifactKind detect_artifact(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string name;
  in >> name;
  if (name == "mwlab-field") return ArtifactKind::field;
  if (name == "mwlab-vector") return ArtifactKind::vector;
  if (name == "mwlab-operator") return ArtifactKind::op;
  if (name == "mwlab-reducing") return ArtifactKind::reducing;
  throw FormatError("'" + path + "' is not a known artifact (first token '" + name + "')");
}

MatrixField load_field(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_field(in);
}

VectorField load_vector(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_vector(in);
}

OperatorMatrix load_operator(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_operator(in);
}

ReducingMatrix load_reducing(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_reducing(in);
}

void save_field(const std::string& path, const MatrixField& f) {
  std::ofstream out = open_out(path);
  write_field(out, f);
}

void save_vector(const std::string& path, const VectorField& v) {
  std::ofstream out = open_out(path);
  write_vector(out, v);
}

void save_operator(const std::string& path, const OperatorMatrix& t) {
  std::ofstream out = open_out(path);
  write_operator(out, t);
}

void save_reducing(const std::string& path, const ReducingMatrix& m) {
  std::ofstream out = open_out(path);
  write_reducing(out, m);
}

void dump_artifact(const std::string& path, std::ostream& os) {
  switch (detect_artifact(path)) {
    case ArtifactKind::field:
      write_field(os, load_field(path));
      return;
    case ArtifactKind::vector:
      write_vector(os, load_vector(path));
      return;
    case ArtifactKind::op:
      write_operator(os, load_operator(path));
      return;
    case ArtifactKind::reducing:
      write_reducing(os, load_reducing(path));
      return;
  }
}

}  // namespace mwlab
