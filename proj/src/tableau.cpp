#include "dirkwso/tableau.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace dirkwso {

bool ButcherTableau::is_dirk() const {
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j)
      if (A(i, j) != 0.0) return false;
  return true;
}

bool ButcherTableau::is_stiffly_accurate(double tol) const {
  return (b - A.row(s - 1).transpose()).lpNorm<Eigen::Infinity>() <= tol;
}

bool ButcherTableau::is_invertible(double tol) const {
  if (is_dirk()) {
    return A.diagonal().cwiseAbs().minCoeff() > tol;
  }
  Eigen::PartialPivLU<Mat> lu(A);
  double scale = A.cwiseAbs().maxCoeff();
  return std::abs(lu.determinant()) > tol * std::max(scale, 1.0);
}

bool ButcherTableau::is_equal_time(double tol) const {
  return (c.array() - c(0)).abs().maxCoeff() <= tol;
}

ButcherTableau make_tableau(const Mat& A, const Vec& b, std::string name) {
  return make_tableau(A, b, std::move(name), std::nullopt, std::nullopt);
}

ButcherTableau make_tableau(const Mat& A, const Vec& b, std::string name,
                            std::optional<int> claimed_order,
                            std::optional<int> claimed_wso) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("make_tableau: A must be square, got " +
                                std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  if (b.size() != A.rows())
    throw std::invalid_argument("make_tableau: b has length " + std::to_string(b.size()) +
                                ", expected " + std::to_string(A.rows()));
  ButcherTableau t;
  t.s = static_cast<int>(A.rows());
  t.A = A;
  t.b = b;
  t.c = A.rowwise().sum();
  t.name = std::move(name);
  t.claimed_order = claimed_order;
  t.claimed_wso = claimed_wso;
  return t;
}

namespace {

Mat from_rows(int s, std::initializer_list<std::initializer_list<double>> rows) {
  Mat A = Mat::Zero(s, s);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) A(i, j++) = v;
    ++i;
  }
  return A;
}

ButcherTableau stiffly_accurate_from(const Mat& A, std::string name, int p, int wso) {
  return make_tableau(A, A.row(A.rows() - 1).transpose(), std::move(name), p, wso);
}

std::vector<RegistryEntry> build_registry() {
  std::vector<RegistryEntry> reg;

  // 4-stage order-3 DIRK with weak stage order 2.
  {
    Mat A = from_rows(4, {{0.01900072890},
                          {0.40434605601, 0.38435717512},
                          {0.06487908412, -0.16389640295, 0.51545231222},
                          {0.02343549374, -0.41207877888, 0.96661161281, 0.42203167233}});
    reg.push_back({"wso2-p3",
                   "4-stage stiffly accurate L-stable DIRK, order 3, weak stage order 2",
                   stiffly_accurate_from(A, "wso2-p3", 3, 2)});
  }

  // 4-stage order-3 DIRK with weak stage order 3.
  {
    Mat A = from_rows(4, {{0.13756543551},
                          {0.56695122794, 0.23483888782},
                          {-1.08354072813, 2.96618223864, 0.44915521951},
                          {0.59761291500, -0.43420997584, -0.05305815322, 0.88965521406}});
    reg.push_back({"wso3-p3",
                   "4-stage stiffly accurate L-stable DIRK, order 3, weak stage order 3",
                   stiffly_accurate_from(A, "wso3-p3", 3, 3)});
  }

  // 6-stage order-4 DIRK with weak stage order 3.
  {
    Mat A = from_rows(
        6, {{0.079672377876931},
            {0.328355391763968, 0.136009256546967},
            {-0.650772774016417, 1.742859063495349, 0.256472952467792},
            {-0.714580550967259, 1.793745752775934, -0.078254785672497, 0.311753794172585},
            {-1.120092779092918, 1.983452339867353, 3.117393885836001, -3.761930177913743,
             0.770646024799205},
            {0.214823667785537, 0.536367363903245, 0.154488125726409, -0.217748592703941,
             0.072226422925896, 0.239843012362853}});
    reg.push_back({"wso3-p4",
                   "6-stage stiffly accurate L-stable DIRK, order 4, weak stage order 3",
                   stiffly_accurate_from(A, "wso3-p4", 4, 3)});
  }

  // Alexander (1977): 3-stage L-stable SDIRK of order 3, stage order 1.
  {
    const double g = 0.43586652150845899941601945;
    Mat A = from_rows(3, {{g},
                          {(1.0 - g) / 2.0, g},
                          {-1.5 * g * g + 4.0 * g - 0.25, 1.5 * g * g - 5.0 * g + 1.25, g}});
    reg.push_back({"wso1-p3",
                   "3-stage L-stable SDIRK, order 3 (Alexander 1977); weak stage order 1 comparator",
                   stiffly_accurate_from(A, "wso1-p3", 3, 1)});
  }

  // Hairer & Wanner: 5-stage L-stable SDIRK of order 4, gamma = 1/4.
  {
    Mat A = from_rows(5, {{0.25},
                          {0.5, 0.25},
                          {17.0 / 50.0, -1.0 / 25.0, 0.25},
                          {371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25},
                          {25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25}});
    reg.push_back({"wso1-p4",
                   "5-stage L-stable SDIRK, order 4 (Hairer & Wanner); weak stage order 1 comparator",
                   stiffly_accurate_from(A, "wso1-p4", 4, 1)});
  }

  // ESDIRK with explicit first stage, c2 = 2*gamma, c3 = 3/5, stiffly accurate,
  // stage order 2, order 3, L-stable. Coefficients follow from those constraints;
  // this reproduces the Kennedy & Carpenter ESDIRK3(2)4L[2]SA family member.
  {
    const double g = 0.43586652150845899941601945;
    const double c3 = 0.6;
    const double a32 = c3 * (c3 - 2.0 * g) / (4.0 * g);
    const double a31 = c3 - a32 - g;
    // Weights solve b^T e = 1, b^T c = 1/2, b^T c^2 = 1/3 with b4 = gamma.
    Eigen::Matrix3d M;
    M << 1, 1, 1, 0, 2 * g, c3, 0, 4 * g * g, c3 * c3;
    Eigen::Vector3d r(1.0 - g, 0.5 - g, 1.0 / 3.0 - g);
    Eigen::Vector3d w = M.partialPivLu().solve(r);
    Mat A = from_rows(4, {{0.0}, {g, g}, {a31, a32, g}, {w(0), w(1), w(2), g}});
    reg.push_back(
        {"edirk-so2-p3",
         "4-stage stiffly accurate L-stable ESDIRK, order 3, stage order 2 "
         "(Kennedy & Carpenter ESDIRK3(2)4L[2]SA family)",
         stiffly_accurate_from(A, "edirk-so2-p3", 3, 2)});
  }

  {
    Mat A(1, 1);
    A << 1.0;
    reg.push_back({"backward-euler", "implicit Euler, order 1",
                   stiffly_accurate_from(A, "backward-euler", 1, 1)});
  }

  return reg;
}

}  // namespace

const std::vector<RegistryEntry>& registry() {
  static const std::vector<RegistryEntry> reg = build_registry();
  return reg;
}

ButcherTableau registry_get(std::string_view name) {
  for (const auto& e : registry())
    if (e.name == name) return e.tableau;
  std::string msg = "unknown scheme '" + std::string(name) + "'; available:";
  for (const auto& e : registry()) msg += " " + e.name;
  throw std::invalid_argument(msg);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string out(buf);
  if (out.find_first_of(".eE") == std::string::npos &&
      out.find("inf") == std::string::npos && out.find("nan") == std::string::npos)
    out += ".0";
  return out;
}

}  // namespace

std::string serialize(const ButcherTableau& t) {
  std::ostringstream os;
  os << "# Butcher tableau (c derived from row sums of A)\n";
  if (!t.name.empty()) os << "name " << t.name << "\n";
  os << "s " << t.s << "\n";
  if (t.claimed_order) os << "claimed_order " << *t.claimed_order << "\n";
  if (t.claimed_wso) os << "claimed_wso " << *t.claimed_wso << "\n";
  if (t.is_dirk()) os << "dirk\n";
  for (int i = 0; i < t.s; ++i)
    for (int j = 0; j < t.s; ++j)
      if (t.A(i, j) != 0.0)
        os << "a " << i + 1 << " " << j + 1 << " " << fmt_double(t.A(i, j)) << "\n";
  for (int j = 0; j < t.s; ++j)
    if (t.b(j) != 0.0) os << "b " << j + 1 << " " << fmt_double(t.b(j)) << "\n";
  for (int i = 0; i < t.s; ++i) os << "c " << i + 1 << " " << fmt_double(t.c(i)) << "\n";
  return os.str();
}

namespace {

[[noreturn]] void parse_fail(int lineno, const std::string& line, const std::string& why) {
  throw TableauParseError("tableau parse error at line " + std::to_string(lineno) + " ('" +
                          line + "'): " + why);
}

}  // namespace

ButcherTableau parse_tableau(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;

  int s = -1;
  bool declared_dirk = false;
  std::string name;
  std::optional<int> claimed_order, claimed_wso;
  Mat A;
  Vec b;
  std::vector<std::pair<int, double>> c_lines;
  std::vector<std::pair<int, int>> c_linenos;  // (index, line number) for diagnostics

  while (std::getline(is, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string key;
    if (!(ls >> key)) continue;

    if (key == "name") {
      std::getline(ls, name);
      const auto pos = name.find_first_not_of(" \t");
      name = (pos == std::string::npos) ? std::string() : name.substr(pos);
    } else if (key == "s") {
      if (!(ls >> s) || s <= 0) parse_fail(lineno, line, "stage count must be a positive integer");
      A = Mat::Zero(s, s);
      b = Vec::Zero(s);
    } else if (key == "dirk") {
      declared_dirk = true;
    } else if (key == "claimed_order" || key == "claimed_wso") {
      int v;
      if (!(ls >> v)) parse_fail(lineno, line, "expected an integer");
      (key == "claimed_order" ? claimed_order : claimed_wso) = v;
    } else if (key == "a" || key == "b" || key == "c") {
      if (s < 0) parse_fail(lineno, line, "'s <stages>' must precede coefficient lines");
      int i = 0, j = 0;
      double v = 0;
      bool ok = (key == "a") ? static_cast<bool>(ls >> i >> j >> v)
                             : static_cast<bool>(ls >> i >> v);
      if (!ok) parse_fail(lineno, line, "malformed coefficient line");
      if (i < 1 || i > s || (key == "a" && (j < 1 || j > s)))
        parse_fail(lineno, line, "index out of range for s = " + std::to_string(s));
      if (key == "a") {
        if (declared_dirk && j > i)
          parse_fail(lineno, line, "entry above the diagonal in a tableau declared dirk");
        A(i - 1, j - 1) = v;
      } else if (key == "b") {
        b(i - 1) = v;
      } else {
        c_lines.emplace_back(i - 1, v);
        c_linenos.emplace_back(i - 1, lineno);
      }
    } else {
      parse_fail(lineno, line, "unknown keyword '" + key + "'");
    }
  }

  if (s < 0) throw TableauParseError("tableau parse error: missing 's <stages>' line");
  if (declared_dirk) {
    for (int i = 0; i < s; ++i)
      for (int j = i + 1; j < s; ++j)
        if (A(i, j) != 0.0)
          throw TableauParseError("tableau parse error: a " + std::to_string(i + 1) + " " +
                                  std::to_string(j + 1) +
                                  " is above the diagonal but the file declares dirk");
  }
  ButcherTableau t = make_tableau(A, b, name, claimed_order, claimed_wso);
  for (size_t k = 0; k < c_lines.size(); ++k) {
    const auto [idx, v] = c_lines[k];
    if (std::abs(v - t.c(idx)) > 1e-13)
      throw TableauParseError(
          "tableau parse error at line " + std::to_string(c_linenos[k].second) + ": c " +
          std::to_string(idx + 1) + " = " + fmt_double(v) + " disagrees with row sum " +
          fmt_double(t.c(idx)));
  }
  return t;
}

}  // namespace dirkwso
