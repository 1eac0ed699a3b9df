// Copyright 2026 The CCL-Derain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace testkit {

double l1(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

namespace {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

}  // namespace

double reference_lcl(const Mat& q, const Mat& k, double tau, double cos_eps) {
  const std::size_t n = q.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> logits(n);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double denom = std::max(norm(q[i]) * norm(k[j]), cos_eps);
      logits[j] = dot(q[i], k[j]) / denom / tau;
      mx = std::max(mx, logits[j]);
    }
    double se = 0.0;
    for (std::size_t j = 0; j < n; ++j) se += std::exp(logits[j] - mx);
    acc += -(logits[i] - mx - std::log(se));
  }
  return acc / static_cast<double>(n);
}

double reference_lcl_multi(const std::vector<std::vector<Mat>>& q,
                           const std::vector<std::vector<Mat>>& k, double tau, double cos_eps) {
  double acc = 0.0;
  for (std::size_t l = 0; l < q.size(); ++l) {
    double layer = 0.0;
    for (std::size_t b = 0; b < q[l].size(); ++b) layer += reference_lcl(q[l][b], k[l][b], tau, cos_eps);
    acc += layer / static_cast<double>(q[l].size());
  }
  return acc / static_cast<double>(q.size());
}

double reference_intra_ratio(const Vec& anchor, const Vec& positive, const Vec& fake_neg,
                             const Vec& real_neg, bool use_fake, bool use_real, double eps) {
  double den = eps;
  if (use_fake) den += l1(anchor, fake_neg);
  if (use_real) den += l1(anchor, real_neg);
  return l1(anchor, positive) / den;
}

IntraRef reference_intra(const Mat& c_r_star, const Mat& c_r, const Mat& c_n_tilde,
                         const Mat& c_n, const Mat& c_n_star, const Mat& c_r_tilde,
                         bool use_fake, bool use_real, double eps) {
  IntraRef r;
  const std::size_t b = c_r.size();
  for (std::size_t i = 0; i < b; ++i) {
    r.branch_i += reference_intra_ratio(c_r_star[i], c_r[i], c_n_tilde[i], c_n[i], use_fake,
                                        use_real, eps);
    r.branch_ii += reference_intra_ratio(c_n_star[i], c_n[i], c_r_tilde[i], c_r[i], use_fake,
                                         use_real, eps);
  }
  r.branch_i /= static_cast<double>(b);
  r.branch_ii /= static_cast<double>(b);
  r.total = r.branch_i + r.branch_ii;
  return r;
}

double reference_inter_side(const Vec& star, const Vec& tilde, const Vec& real, const Vec& neg,
                            bool use_fake_pos, bool use_real_pos, double eps) {
  double num = l1(tilde, real);
  if (use_real_pos) num += l1(star, real);
  if (use_fake_pos) num += l1(star, tilde);
  return num / (l1(star, neg) + l1(tilde, neg) + eps);
}

InterRef reference_inter(const std::vector<InterLayerRef>& layers, bool use_fake_pos,
                         bool use_real_pos, double eps) {
  InterRef r;
  for (const auto& l : layers) {
    const std::size_t b = l.gn_n.size();
    double ln = 0.0, lr = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      ln += reference_inter_side(l.gn_n_star[i], l.gn_n_tilde[i], l.gn_n[i], l.gr_r[i],
                                 use_fake_pos, use_real_pos, eps);
      lr += reference_inter_side(l.gr_r_star[i], l.gr_r_tilde[i], l.gr_r[i], l.gn_n[i],
                                 use_fake_pos, use_real_pos, eps);
    }
    r.loss_n += ln / static_cast<double>(b);
    r.loss_r += lr / static_cast<double>(b);
  }
  r.loss_n /= static_cast<double>(layers.size());
  r.loss_r /= static_cast<double>(layers.size());
  r.total = r.loss_n + r.loss_r;
  return r;
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double mean_of(const Vec& v, const std::function<double(double)>& f) {
  double s = 0.0;
  for (double x : v) s += f(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

double reference_adv_g(const Vec& fake, int mode) {
  if (mode == 0) return mean_of(fake, [](double f) { return (f - 1.0) * (f - 1.0); });
  return mean_of(fake, [](double f) { return softplus(-f); });
}

double reference_adv_d(const Vec& real, const Vec& fake, int mode) {
  if (mode == 0) {
    return mean_of(real, [](double r) { return (r - 1.0) * (r - 1.0); }) +
           mean_of(fake, [](double f) { return f * f; });
  }
  return mean_of(real, [](double r) { return softplus(-r); }) +
         mean_of(fake, [](double f) { return softplus(f); });
}

double reference_total(double adv, double lcl, double intra, double inter, double l1w,
                       double l2w, double l3w) {
  return adv + l1w * lcl + l2w * intra + l3w * inter;
}

namespace {

std::vector<Vec> planes_of(const RgbImage& img, bool luma) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (luma) {
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
    }
    return {y};
  }
  std::vector<Vec> p(3, Vec(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) p[c][i] = img.rgb[3 * i + c];
  }
  return p;
}

}  // namespace

double reference_mse(const RgbImage& a, const RgbImage& b, bool luma) {
  const auto pa = planes_of(a, luma), pb = planes_of(b, luma);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * a.width + x;
        s += (pa[c][i] - pb[c][i]) * (pa[c][i] - pb[c][i]);
        ++n;
      }
    }
  }
  return s / static_cast<double>(n);
}

double reference_psnr(const RgbImage& a, const RgbImage& b, bool luma, double max_val) {
  const double m = reference_mse(a, b, luma);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / m);
}

double reference_ssim(const RgbImage& a, const RgbImage& b, bool luma) {
  const int win = 11;
  const double sigma = 1.5;
  double w[win][win];
  double wsum = 0.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double di = i - win / 2, dj = j - win / 2;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      wsum += w[i][j];
    }
  }
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const auto pa = planes_of(a, luma), pb = planes_of(b, luma);
  double total = 0.0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= a.height; ++y0) {
      for (int x0 = 0; x0 + win <= a.width; ++x0) {
        double ma = 0, mb = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const std::size_t k = static_cast<std::size_t>(y0 + i) * a.width + x0 + j;
            ma += w[i][j] / wsum * pa[c][k];
            mb += w[i][j] / wsum * pb[c][k];
          }
        }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const std::size_t k = static_cast<std::size_t>(y0 + i) * a.width + x0 + j;
            const double da = pa[c][k] - ma, db = pb[c][k] - mb;
            va += w[i][j] / wsum * da * da;
            vb += w[i][j] / wsum * db * db;
            cov += w[i][j] / wsum * da * db;
          }
        }
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
    total += acc / count;
  }
  return total / static_cast<double>(pa.size());
}

FiniteDiffResult finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                                  double h, const std::vector<std::size_t>& coords) {
  FiniteDiffResult r;
  r.grad.assign(x.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> idx = coords;
  if (idx.empty()) {
    for (std::size_t i = 0; i < x.size(); ++i) idx.push_back(i);
  }
  Vec xp = x;
  for (std::size_t i : idx) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      r.skipped.push_back(i);
      continue;
    }
    r.grad[i] = (fp - fm) / (2.0 * h);
  }
  return r;
}

std::uint64_t CaseRng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double CaseRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double CaseRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

Vec CaseRng::normal_vec(std::size_t n, double scale) {
  Vec v(n);
  for (auto& x : v) x = scale * normal();
  return v;
}

Mat CaseRng::normal_mat(std::size_t rows, std::size_t cols, double scale) {
  Mat m(rows);
  for (auto& r : m) r = normal_vec(cols, scale);
  return m;
}

}  // namespace testkit
