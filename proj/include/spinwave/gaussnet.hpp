#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spinwave/errors.hpp"

namespace spinwave {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Set by squeezer(); lets the Fock oracle use the Schmidt kernel.
struct SqueezeTag {
  int w = 0;
  int r = 0;
  double amplitude = 0.0;
};

// Linear map on (a_1, a_1^dag, a_2, a_2^dag, ...): output operator vector
// equals matrix * input operator vector. Row 2k is the output a_k, row 2k+1
// its adjoint.
class BogoliubovTransform {
 public:
  BogoliubovTransform() = default;
  explicit BogoliubovTransform(int modes) : n_(modes), m_(CMatrix::Identity(2 * modes, 2 * modes)) {}
  BogoliubovTransform(int modes, CMatrix m, bool truncated = false)
      : n_(modes), m_(std::move(m)), truncated_(truncated) {
    if (m_.rows() != 2 * modes || m_.cols() != 2 * modes)
      throw DomainError("Bogoliubov matrix must be 2N x 2N");
  }

  static BogoliubovTransform identity(int modes) { return BogoliubovTransform(modes); }

  int modes() const { return n_; }
  const CMatrix& matrix() const { return m_; }
  bool truncated() const { return truncated_; }
  const std::optional<SqueezeTag>& squeeze_tag() const { return tag_; }
  void set_squeeze_tag(SqueezeTag t) { tag_ = t; }

  // (a * b) applies b first.
  friend BogoliubovTransform operator*(const BogoliubovTransform& a, const BogoliubovTransform& b) {
    if (a.n_ != b.n_) throw DomainError("mode count mismatch in composition");
    return BogoliubovTransform(a.n_, a.m_ * b.m_, a.truncated_ || b.truncated_);
  }

  static CMatrix omega(int modes) {
    CMatrix w = CMatrix::Zero(2 * modes, 2 * modes);
    for (int j = 0; j < modes; ++j) {
      w(2 * j, 2 * j + 1) = 1.0;
      w(2 * j + 1, 2 * j) = -1.0;
    }
    return w;
  }

  // max |M Omega M^T - Omega|
  double symplectic_error() const {
    const CMatrix w = omega(n_);
    return (m_ * w * m_.transpose() - w).cwiseAbs().maxCoeff();
  }

  bool is_passive(double tol = 1e-14) const {
    for (int k = 0; k < n_; ++k)
      for (int j = 0; j < n_; ++j) {
        if (std::abs(m_(2 * k, 2 * j + 1)) > tol || std::abs(m_(2 * k + 1, 2 * j)) > tol) return false;
        if (std::abs(m_(2 * k + 1, 2 * j + 1) - std::conj(m_(2 * k, 2 * j))) > tol) return false;
      }
    return true;
  }

  // U with a_out_k = sum_j U(k, j) a_in_j; meaningful for passive maps.
  CMatrix passive_block() const {
    CMatrix u(n_, n_);
    for (int k = 0; k < n_; ++k)
      for (int j = 0; j < n_; ++j) u(k, j) = m_(2 * k, 2 * j);
    return u;
  }

  static BogoliubovTransform from_passive(const CMatrix& u, bool truncated = false) {
    const int n = static_cast<int>(u.rows());
    CMatrix m = CMatrix::Zero(2 * n, 2 * n);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        m(2 * k, 2 * j) = u(k, j);
        m(2 * k + 1, 2 * j + 1) = std::conj(u(k, j));
      }
    return BogoliubovTransform(n, m, truncated);
  }

  // Same map acting on a larger system; new modes are left untouched.
  BogoliubovTransform embedded(int modes) const {
    if (modes < n_) throw DomainError("cannot embed into fewer modes");
    CMatrix m = CMatrix::Identity(2 * modes, 2 * modes);
    m.topLeftCorner(2 * n_, 2 * n_) = m_;
    BogoliubovTransform out(modes, m, truncated_);
    out.tag_ = tag_;
    return out;
  }

  // Row-major complex entries, one row per line, "re im" pairs.
  void write_csv(std::ostream& os) const {
    os << "row,col,re,im\n";
    for (int r = 0; r < m_.rows(); ++r)
      for (int c = 0; c < m_.cols(); ++c) os << r << ',' << c << ',' << m_(r, c).real() << ',' << m_(r, c).imag() << '\n';
  }

 private:
  int n_ = 0;
  CMatrix m_;
  bool truncated_ = false;
  std::optional<SqueezeTag> tag_;
};

namespace detail {
inline void check_mode(int m, int n) {
  if (m < 0 || m >= n) throw DomainError("mode index out of range");
}
}  // namespace detail

// Two-mode squeezer with amplitude lambda = tanh(xi):
// a_r -> (a_r + lambda a_w^dag) / sqrt(1 - lambda^2), and r <-> w.
inline BogoliubovTransform squeezer(double lambda, int w, int r, int modes) {
  if (!(lambda >= 0.0) || lambda >= 1.0) throw DomainError("squeezer amplitude must lie in [0, 1)");
  detail::check_mode(w, modes);
  detail::check_mode(r, modes);
  if (w == r) throw DomainError("squeezer needs two distinct modes");
  CMatrix m = CMatrix::Identity(2 * modes, 2 * modes);
  const double c = 1.0 / std::sqrt(1.0 - lambda * lambda);
  const double s = lambda * c;
  for (int i : {w, r}) {
    m(2 * i, 2 * i) = c;
    m(2 * i + 1, 2 * i + 1) = c;
  }
  m(2 * r, 2 * w + 1) = s;
  m(2 * r + 1, 2 * w) = s;
  m(2 * w, 2 * r + 1) = s;
  m(2 * w + 1, 2 * r) = s;
  BogoliubovTransform t(modes, m);
  t.set_squeeze_tag({w, r, lambda});
  return t;
}

// Squeezer whose vacuum pair probability tanh^2(xi) equals p.
inline BogoliubovTransform squeezer_from_pair_probability(double p, int w, int r, int modes) {
  if (!(p >= 0.0) || p >= 1.0) throw DomainError("pair probability must lie in [0, 1)");
  return squeezer(std::sqrt(p), w, r, modes);
}

// x -> tau x + sqrt(1-tau^2) y,  y -> -sqrt(1-tau^2) x + tau y
inline BogoliubovTransform beamsplitter(double tau, int x, int y, int modes) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("transmission must lie in [0, 1]");
  detail::check_mode(x, modes);
  detail::check_mode(y, modes);
  if (x == y) throw DomainError("beamsplitter needs two distinct modes");
  CMatrix m = CMatrix::Identity(2 * modes, 2 * modes);
  const double s = std::sqrt(1.0 - tau * tau);
  for (int k : {0, 1}) {
    m(2 * x + k, 2 * x + k) = tau;
    m(2 * x + k, 2 * y + k) = s;
    m(2 * y + k, 2 * x + k) = -s;
    m(2 * y + k, 2 * y + k) = tau;
  }
  return BogoliubovTransform(modes, m);
}

inline BogoliubovTransform transposed(const BogoliubovTransform& t) {
  return BogoliubovTransform(t.modes(), t.matrix().transpose(), t.truncated());
}

// Three-way splitter on modes ordered by increasing K_y, (vb, rb, ra, va):
// S_K -> (S_K + e^{i theta} S_{K+kg} - e^{-i theta} S_{K-kg}) / sqrt(3),
// neighbours outside the quadruple dropped (edge rows have norm sqrt(2/3)).
inline BogoliubovTransform threeway_splitter(double theta, const std::array<int, 4>& q, int modes) {
  for (int i = 0; i < 4; ++i) {
    detail::check_mode(q[i], modes);
    for (int j = 0; j < i; ++j)
      if (q[i] == q[j]) throw DomainError("three-way splitter needs four distinct modes");
  }
  CMatrix m = CMatrix::Identity(2 * modes, 2 * modes);
  const double r3 = 1.0 / std::sqrt(3.0);
  for (int a : q)
    for (int k : {0, 1}) m(2 * a + k, 2 * a + k) = 0.0;
  for (int i = 0; i < 4; ++i) {
    const cd up = std::polar(r3, theta);
    const cd down = -std::polar(r3, -theta);
    const int a = q[i];
    m(2 * a, 2 * a) = r3;
    m(2 * a + 1, 2 * a + 1) = r3;
    if (i + 1 < 4) {
      m(2 * a, 2 * q[i + 1]) = up;
      m(2 * a + 1, 2 * q[i + 1] + 1) = std::conj(up);
    }
    if (i > 0) {
      m(2 * a, 2 * q[i - 1]) = down;
      m(2 * a + 1, 2 * q[i - 1] + 1) = std::conj(down);
    }
  }
  return BogoliubovTransform(modes, m, true);
}

// Physical dilation of a truncated passive map. Rows that are unit-norm and
// mutually orthonormal are kept verbatim; every other row is Gram-Schmidted
// against the rows before it and topped up in its own auxiliary mode.
// Auxiliary output rows complete the unitary over the standard basis.
inline BogoliubovTransform unitary_completion(const BogoliubovTransform& t) {
  if (!t.truncated()) throw DomainError("unitary_completion expects a truncated transform");
  if (!t.is_passive()) throw UnsupportedElement("unitary_completion supports passive maps only");
  const int n = t.modes();
  const CMatrix u = t.passive_block();
  constexpr double tol = 1e-12;

  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  std::vector<int> kept_rows;
  for (int i = 0; i < n; ++i) {
    if (std::abs(u.row(i).norm() - 1.0) > tol) continue;
    bool ortho = true;
    for (int k : kept_rows)
      if (std::abs(u.row(k).dot(u.row(i))) > tol) ortho = false;
    if (ortho) {
      kept[static_cast<std::size_t>(i)] = true;
      kept_rows.push_back(i);
    }
  }
  const int aux = n - static_cast<int>(kept_rows.size());
  const int total = n + aux;
  CMatrix v = CMatrix::Zero(total, total);
  std::vector<int> done;
  for (int k : kept_rows) {
    v.row(k).head(n) = u.row(k);
    done.push_back(k);
  }
  int next_aux = n;
  for (int i = 0; i < n; ++i) {
    if (kept[static_cast<std::size_t>(i)]) continue;
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(total);
    row.head(n) = u.row(i);
    for (int k : done) row -= v.row(k).dot(row) * v.row(k);
    const double r2 = row.squaredNorm();
    if (r2 > 1.0 - 1e-14) throw NumericalFailure("unitary completion: deficient row is not a contraction");
    row(next_aux++) = std::sqrt(1.0 - r2);
    v.row(i) = row / row.norm();
    done.push_back(i);
  }
  int fill = n;
  for (int e = 0; e < total && fill < total; ++e) {
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(total);
    row(e) = 1.0;
    for (int k : done) row -= v.row(k).dot(row) * v.row(k);
    const double nr = row.norm();
    if (nr < 1e-8) continue;
    v.row(fill) = row / nr;
    done.push_back(fill++);
  }
  if (fill != total) throw NumericalFailure("unitary completion: rank defect");
  const double err = (v * v.adjoint() - CMatrix::Identity(total, total)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw NumericalFailure("unitary completion: result is not unitary");
  return BogoliubovTransform::from_passive(v, false);
}

struct Vacuum {};
struct Thermal {
  double nbar = 0.0;
};
struct Coherent {
  cd alpha = 0.0;
};
using ModeInput = std::variant<Vacuum, Thermal, Coherent>;

struct InputSpec {
  std::vector<ModeInput> modes;

  static InputSpec vacuum(int n) { return {std::vector<ModeInput>(static_cast<std::size_t>(n), Vacuum{})}; }

  int size() const { return static_cast<int>(modes.size()); }
  InputSpec& set(int i, ModeInput in) {
    detail::check_mode(i, size());
    if (auto* th = std::get_if<Thermal>(&in); th && !(th->nbar >= 0.0))
      throw DomainError("thermal occupation must be non-negative");
    modes[static_cast<std::size_t>(i)] = in;
    return *this;
  }
  InputSpec extended(int n) const {
    InputSpec out = *this;
    out.modes.resize(static_cast<std::size_t>(n), Vacuum{});
    return out;
  }
  double nbar(int i) const {
    if (auto* th = std::get_if<Thermal>(&modes[static_cast<std::size_t>(i)])) return th->nbar;
    return 0.0;
  }
  cd mean(int i) const {
    if (auto* c = std::get_if<Coherent>(&modes[static_cast<std::size_t>(i)])) return c->alpha;
    return 0.0;
  }
};

// A staged network: stages[0] acts first.
struct Network {
  int modes = 0;
  std::vector<BogoliubovTransform> stages;
  InputSpec inputs;

  BogoliubovTransform total() const {
    BogoliubovTransform t(modes);
    for (const auto& s : stages) t = s * t;
    return t;
  }
  bool truncated() const {
    return std::any_of(stages.begin(), stages.end(), [](const auto& s) { return s.truncated(); });
  }
};

// Replace each truncated stage by its unitary completion, growing the mode
// count by the auxiliary vacuum modes it needs.
inline Network physical(const Network& net) {
  Network out{net.modes, {}, net.inputs};
  for (const auto& s : net.stages) {
    BogoliubovTransform st = s.embedded(out.modes);
    if (st.truncated()) {
      st = unitary_completion(st);
      const int grown = st.modes();
      for (auto& prev : out.stages) prev = prev.embedded(grown);
      out.modes = grown;
      out.inputs = out.inputs.extended(grown);
    }
    out.stages.push_back(std::move(st));
  }
  return out;
}

// Expectations of output ladder operators by Wick's theorem over a product
// of thermal/vacuum/coherent inputs.
class WickEvaluator {
 public:
  WickEvaluator(const BogoliubovTransform& t, const InputSpec& in) : t_(t), in_(in) {
    if (in.size() != t.modes()) throw DomainError("input spec size does not match transform");
  }

  // Output operator: mode k, adjoint flag.
  struct Op {
    int mode;
    bool dagger;
  };

  // <O_1 O_2 ... O_n> in the given order, n <= 8.
  cd ordered(const std::vector<Op>& ops) const {
    std::vector<const cd*> rows;
    std::vector<cd> means;
    rows.reserve(ops.size());
    for (const auto& o : ops) {
      detail::check_mode(o.mode, t_.modes());
      const int r = 2 * o.mode + (o.dagger ? 1 : 0);
      rows.push_back(&row_cache(r)[0]);
      means.push_back(mean_of(r));
    }
    std::vector<int> idx(ops.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return expand(idx, rows, means);
  }

  // <:prod n_i:> = <prod b^dag prod b> over the listed modes (repeats allowed).
  double normal_moment(const std::vector<int>& modes) const {
    if (modes.size() > 4) throw UnsupportedOrder("moments above order 4 are not supported");
    std::vector<Op> ops;
    for (int m : modes) ops.push_back({m, true});
    for (auto it = modes.rbegin(); it != modes.rend(); ++it) ops.push_back({*it, false});
    return ordered(ops).real();
  }

  cd contraction(int row_x, int row_y) const {
    const auto& x = row_cache(row_x);
    const auto& y = row_cache(row_y);
    cd s = 0.0;
    for (int j = 0; j < t_.modes(); ++j) {
      const double nb = in_.nbar(j);
      s += x[2 * j] * y[2 * j + 1] * (nb + 1.0) + x[2 * j + 1] * y[2 * j] * nb;
    }
    return s;
  }

  cd mean_of(int row) const {
    const auto& x = row_cache(row);
    cd s = 0.0;
    for (int j = 0; j < t_.modes(); ++j) {
      const cd a = in_.mean(j);
      s += x[2 * j] * a + x[2 * j + 1] * std::conj(a);
    }
    return s;
  }

 private:
  const std::vector<cd>& row_cache(int r) const {
    if (rows_.empty()) rows_.resize(static_cast<std::size_t>(2 * t_.modes()));
    auto& v = rows_[static_cast<std::size_t>(r)];
    if (v.empty()) {
      v.resize(static_cast<std::size_t>(2 * t_.modes()));
      for (int c = 0; c < 2 * t_.modes(); ++c) v[static_cast<std::size_t>(c)] = t_.matrix()(r, c);
    }
    return v;
  }

  cd pair(const cd* x, const cd* y) const {
    cd s = 0.0;
    for (int j = 0; j < t_.modes(); ++j) {
      const double nb = in_.nbar(j);
      s += x[2 * j] * y[2 * j + 1] * (nb + 1.0) + x[2 * j + 1] * y[2 * j] * nb;
    }
    return s;
  }

  // First operator is either replaced by its mean or contracted with a later one.
  cd expand(const std::vector<int>& idx, const std::vector<const cd*>& rows, const std::vector<cd>& means) const {
    if (idx.empty()) return 1.0;
    const int f = idx[0];
    std::vector<int> rest(idx.begin() + 1, idx.end());
    cd total = 0.0;
    if (means[static_cast<std::size_t>(f)] != 0.0) total += means[static_cast<std::size_t>(f)] * expand(rest, rows, means);
    for (std::size_t j = 0; j < rest.size(); ++j) {
      const cd c = pair(rows[static_cast<std::size_t>(f)], rows[static_cast<std::size_t>(rest[j])]);
      if (c == 0.0) continue;
      std::vector<int> sub;
      sub.reserve(rest.size() - 1);
      for (std::size_t k = 0; k < rest.size(); ++k)
        if (k != j) sub.push_back(rest[k]);
      total += c * expand(sub, rows, means);
    }
    return total;
  }

  BogoliubovTransform t_;
  InputSpec in_;
  mutable std::vector<std::vector<cd>> rows_;
};

namespace detail {
// S(k, j): Stirling numbers of the second kind for k <= 4.
inline double stirling2(int k, int j) {
  static const double s[5][5] = {{1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {0, 1, 1, 0, 0}, {0, 1, 3, 1, 0}, {0, 1, 7, 6, 1}};
  return s[k][j];
}

// Expand <prod n_i^{k_i}> into normal-ordered moments via n^k = sum_j S(k,j) :n^j:.
template <class NormalMoment>
double raw_from_normal(const std::vector<int>& modes, NormalMoment&& nm) {
  if (modes.size() > 4) throw UnsupportedOrder("moments above order 4 are not supported");
  std::vector<std::pair<int, int>> mult;  // (mode, multiplicity)
  for (int m : modes) {
    auto it = std::find_if(mult.begin(), mult.end(), [&](auto& p) { return p.first == m; });
    if (it == mult.end())
      mult.emplace_back(m, 1);
    else
      ++it->second;
  }
  double total = 0.0;
  std::vector<int> pick(mult.size(), 1);
  while (true) {
    double coef = 1.0;
    std::vector<int> list;
    for (std::size_t i = 0; i < mult.size(); ++i) {
      coef *= stirling2(mult[i].second, pick[i]);
      for (int r = 0; r < pick[i]; ++r) list.push_back(mult[i].first);
    }
    if (coef != 0.0) total += coef * nm(list);
    std::size_t i = 0;
    while (i < mult.size() && ++pick[i] > mult[i].second) pick[i++] = 1;
    if (i == mult.size()) break;
  }
  return total;
}
}  // namespace detail

// <prod n_i> for the listed output modes (repeats allowed), at most 4 factors.
inline double moments(const BogoliubovTransform& t, const InputSpec& in, const std::vector<int>& modes) {
  WickEvaluator w(t, in);
  return detail::raw_from_normal(modes, [&](const std::vector<int>& l) { return w.normal_moment(l); });
}

// <:prod n_i:> (factorial moments for repeated modes).
inline double normal_moments(const BogoliubovTransform& t, const InputSpec& in, const std::vector<int>& modes) {
  return WickEvaluator(t, in).normal_moment(modes);
}

struct SecondMoments {
  CMatrix A;     // <a_i a_j>
  CMatrix B;     // <a_i^dag a_j>
  CVector mean;  // <a_i>
};

inline SecondMoments second_moments(const BogoliubovTransform& t, const InputSpec& in) {
  WickEvaluator w(t, in);
  const int n = t.modes();
  SecondMoments s{CMatrix(n, n), CMatrix(n, n), CVector(n)};
  for (int i = 0; i < n; ++i) s.mean(i) = w.mean_of(2 * i);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      s.A(i, j) = w.contraction(2 * i, 2 * j) + s.mean(i) * s.mean(j);
      s.B(i, j) = w.contraction(2 * i + 1, 2 * j) + std::conj(s.mean(i)) * s.mean(j);
    }
  return s;
}

}  // namespace spinwave
