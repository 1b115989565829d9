#pragma once

// Stand-alone SIMP implementation used as a cross-check of the library
// solver. It shares no code with it: quadrature element matrices, a banded
// Cholesky in the natural dof order, a double-loop sensitivity filter and a
// plain OC bisection.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles/quadrature.hpp"

namespace oracle {

struct RefProblem {
  int nelx = 0;
  int nely = 0;
  bool heat = false;
  std::vector<int> fixed;
  std::vector<std::pair<int, double>> loads;
  double volfrac = 0.5;
};

// Symmetric positive definite band matrix, lower band stored row-wise.
class BandCholesky {
 public:
  BandCholesky(int n, int bandwidth) : n_(n), bw_(bandwidth), a_(static_cast<size_t>(n) * (bandwidth + 1), 0.0) {}
  double& at(int i, int j) { return a_[static_cast<size_t>(i) * (bw_ + 1) + (i - j)]; }  // i >= j, i - j <= bw

  void factor() {
    for (int j = 0; j < n_; ++j) {
      double d = at(j, j);
      for (int k = std::max(0, j - bw_); k < j; ++k) d -= at(j, k) * at(j, k);
      if (d <= 0) throw std::runtime_error("band matrix not positive definite");
      const double l = std::sqrt(d);
      at(j, j) = l;
      for (int i = j + 1; i <= std::min(n_ - 1, j + bw_); ++i) {
        double s = at(i, j);
        for (int k = std::max(0, i - bw_); k < j; ++k) s -= at(i, k) * at(j, k);
        at(i, j) = s / l;
      }
    }
  }

  std::vector<double> solve(std::vector<double> b) {
    for (int i = 0; i < n_; ++i) {
      for (int k = std::max(0, i - bw_); k < i; ++k) b[i] -= at(i, k) * b[k];
      b[i] /= at(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {
      for (int k = i + 1; k <= std::min(n_ - 1, i + bw_); ++k) b[i] -= at(k, i) * b[k];
      b[i] /= at(i, i);
    }
    return b;
  }

 private:
  int n_;
  int bw_;
  std::vector<double> a_;
};

struct RefResult {
  std::vector<std::vector<double>> frames;
  std::vector<double> compliances;  // compliances[k] of frames[k]
};

class ReferenceSimp {
 public:
  explicit ReferenceSimp(RefProblem p, double penal = 3.0, double rmin = 1.5, double move = 0.2)
      : p_(std::move(p)), penal_(penal), rmin_(rmin), move_(move) {
    const int per = p_.heat ? 1 : 2;
    ndof_ = per * (p_.nelx + 1) * (p_.nely + 1);
    std::vector<char> fixed(ndof_, 0);
    for (int d : p_.fixed) fixed[d] = 1;
    map_.assign(ndof_, -1);
    for (int d = 0; d < ndof_; ++d)
      if (!fixed[d]) map_[d] = nfree_++;
    if (p_.heat) {
      const Mat4 k = conductivity_by_quadrature();
      ke_.assign(16, 0);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) ke_[i * 4 + j] = k[i][j];
    } else {
      const Mat8 k = stiffness_by_quadrature(0.3);
      ke_.assign(64, 0);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) ke_[i * 8 + j] = k[i][j];
    }
  }

  std::vector<int> edofs(int elx, int ely) const {
    const int n1 = (p_.nely + 1) * elx + ely;  // top-left
    const int n2 = (p_.nely + 1) * (elx + 1) + ely;  // top-right
    if (p_.heat) return {n1 + 1, n2 + 1, n2, n1};
    return {2 * (n1 + 1), 2 * (n1 + 1) + 1, 2 * (n2 + 1), 2 * (n2 + 1) + 1, 2 * n2, 2 * n2 + 1, 2 * n1, 2 * n1 + 1};
  }

  // Full displacement vector for element densities x (row-major nely x nelx).
  std::vector<double> solve(const std::vector<double>& x) const {
    const int per = p_.heat ? 1 : 2;
    const int bw = per * (p_.nely + 2) + per;
    BandCholesky k(nfree_, bw);
    const int ls = p_.heat ? 4 : 8;
    for (int elx = 0; elx < p_.nelx; ++elx) {
      for (int ely = 0; ely < p_.nely; ++ely) {
        const double e = 1e-9 + std::pow(x[ely * p_.nelx + elx], penal_) * (1.0 - 1e-9);
        const auto ed = edofs(elx, ely);
        for (int a = 0; a < ls; ++a)
          for (int b = 0; b < ls; ++b) {
            const int r = map_[ed[a]];
            const int c = map_[ed[b]];
            if (r < 0 || c < 0 || r < c) continue;
            k.at(r, c) += e * ke_[a * ls + b];
          }
      }
    }
    k.factor();
    std::vector<double> f(nfree_, 0.0);
    for (auto [d, v] : p_.loads)
      if (map_[d] >= 0) f[map_[d]] += v;
    const auto uf = k.solve(f);
    std::vector<double> u(ndof_, 0.0);
    for (int d = 0; d < ndof_; ++d)
      if (map_[d] >= 0) u[d] = uf[map_[d]];
    return u;
  }

  double compliance(const std::vector<double>& x, std::vector<double>* dc = nullptr) const {
    const auto u = solve(x);
    const int ls = p_.heat ? 4 : 8;
    double c = 0;
    if (dc) dc->assign(x.size(), 0.0);
    for (int elx = 0; elx < p_.nelx; ++elx) {
      for (int ely = 0; ely < p_.nely; ++ely) {
        const auto ed = edofs(elx, ely);
        double ce = 0;
        for (int a = 0; a < ls; ++a)
          for (int b = 0; b < ls; ++b) ce += u[ed[a]] * ke_[a * ls + b] * u[ed[b]];
        const int j = ely * p_.nelx + elx;
        c += (1e-9 + std::pow(x[j], penal_) * (1 - 1e-9)) * ce;
        if (dc) (*dc)[j] = -penal_ * std::pow(x[j], penal_ - 1) * (1 - 1e-9) * ce;
      }
    }
    return c;
  }

  std::vector<double> filter(const std::vector<double>& x, const std::vector<double>& dc) const {
    const int nx = p_.nelx, ny = p_.nely;
    std::vector<double> out(x.size());
    for (int j = 0; j < nx * ny; ++j) {
      const int jr = j / nx, jc = j % nx;
      double num = 0, den = 0;
      for (int i = 0; i < nx * ny; ++i) {
        const int ir = i / nx, ic = i % nx;
        const double h = std::max(0.0, rmin_ - std::sqrt(double((ir - jr) * (ir - jr) + (ic - jc) * (ic - jc))));
        num += h * x[i] * dc[i];
        den += h;
      }
      out[j] = num / (std::max(1e-3, x[j]) * den);
    }
    return out;
  }

  std::vector<double> oc(const std::vector<double>& x, const std::vector<double>& dc) const {
    double l1 = 1e-9, l2 = 1e9;
    std::vector<double> xn(x.size());
    for (int it = 0; it < 200; ++it) {
      const double lm = 0.5 * (l1 + l2);
      double sum = 0;
      for (size_t j = 0; j < x.size(); ++j) {
        double v = x[j] * std::sqrt(std::max(0.0, -dc[j]) / lm);
        v = std::min({v, x[j] + move_, 1.0});
        v = std::max({v, x[j] - move_, 0.0});
        xn[j] = v;
        sum += v;
      }
      if (sum / x.size() > p_.volfrac) l1 = lm; else l2 = lm;
      if ((l2 - l1) / (l1 + l2) < 1e-14) break;
    }
    return xn;
  }

  RefResult run(int iterations) const {
    RefResult r;
    std::vector<double> x(p_.nelx * p_.nely, p_.volfrac);
    for (int k = 0; k < iterations; ++k) {
      std::vector<double> dc;
      const double c = compliance(x, &dc);
      if (k > 0) r.compliances.push_back(c);
      x = oc(x, filter(x, dc));
      r.frames.push_back(x);
    }
    r.compliances.push_back(compliance(x));
    return r;
  }

 private:
  RefProblem p_;
  double penal_;
  double rmin_;
  double move_;
  int ndof_ = 0;
  int nfree_ = 0;
  std::vector<int> map_;
  std::vector<double> ke_;
};

// Half MBB beam in the same numbering as the library.
inline RefProblem reference_mbb(int nelx, int nely, double volfrac) {
  RefProblem p;
  p.nelx = nelx;
  p.nely = nely;
  p.volfrac = volfrac;
  for (int row = 0; row <= nely; ++row) p.fixed.push_back(2 * row);
  p.fixed.push_back(2 * (nelx + 1) * (nely + 1) - 1);
  p.loads.push_back({1, -1.0});
  return p;
}

}  // namespace oracle
