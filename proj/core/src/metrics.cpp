#include "splatstab/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stack>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

Eigen::Matrix3d normalizer(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double spread = 0.0;
  for (const auto& p : pts) spread += (p - c).norm();
  spread /= static_cast<double>(pts.size());
  const double s = spread > 0.0 ? std::sqrt(2.0) / spread : 1.0;
  Eigen::Matrix3d N;
  N << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return N;
}

std::vector<double> longest_run(const Track& t, int axis) {
  std::vector<double> best, cur;
  for (const auto& p : t.points) {
    if (p) {
      cur.push_back((*p)[axis]);
    } else {
      if (cur.size() > best.size()) best = cur;
      cur.clear();
    }
  }
  if (cur.size() > best.size()) best = cur;
  return best;
}

}  // namespace

long long largest_valid_rectangle(const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<int> heights(w, 0);
  long long best = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) heights[x] = mask(x, y) ? heights[x] + 1 : 0;
    std::stack<int> st;
    for (int x = 0; x <= w; ++x) {
      const int cur = x < w ? heights[x] : 0;
      while (!st.empty() && heights[st.top()] >= cur) {
        const int top = st.top();
        st.pop();
        const int left = st.empty() ? 0 : st.top() + 1;
        best = std::max(best, static_cast<long long>(heights[top]) * (x - left));
      }
      st.push(x);
    }
  }
  return best;
}

double cropping_ratio(const std::vector<Mask>& valid) {
  if (valid.empty()) throw InputError("no frames");
  double sum = 0.0;
  for (const Mask& m : valid) {
    if (!m.same_shape(valid.front())) throw InputError("shape mismatch");
    if (m.empty()) throw InputError("empty mask");
    sum += static_cast<double>(largest_valid_rectangle(m)) / static_cast<double>(m.size());
  }
  return sum / valid.size();
}

std::optional<Eigen::Matrix3d> fit_homography(const CorrespondenceSet& corr) {
  if (corr.size() < 4) return std::nullopt;
  std::vector<Eigen::Vector2d> src, dst;
  for (const auto& [a, b] : corr) {
    src.push_back(a);
    dst.push_back(b);
  }
  const Eigen::Matrix3d Ns = normalizer(src), Nd = normalizer(dst);
  Eigen::MatrixXd A(2 * corr.size(), 9);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Eigen::Vector3d p = Ns * src[i].homogeneous();
    const Eigen::Vector3d q = Nd * dst[i].homogeneous();
    A.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
    A.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() < 8 || sv[7] <= 1e-10 * sv[0]) return std::nullopt;
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  Eigen::Matrix3d H = Nd.inverse() * Hn * Ns;
  if (std::abs(H(2, 2)) < 1e-12) return std::nullopt;
  H /= H(2, 2);
  if (!H.allFinite()) return std::nullopt;
  return H;
}

double anisotropy(const Eigen::Matrix3d& H) {
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(H.topLeftCorner<2, 2>());
  const Eigen::Vector2d s = svd.singularValues();
  return s[0] > 0.0 ? s[1] / s[0] : 0.0;
}

DistortionResult distortion(const std::vector<CorrespondenceSet>& frames) {
  DistortionResult out;
  out.value = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto H = fit_homography(frames[f]);
    if (!H) {
      out.per_frame.push_back(std::numeric_limits<double>::quiet_NaN());
      out.skipped.push_back(static_cast<int>(f));
      continue;
    }
    const double d = anisotropy(*H);
    out.per_frame.push_back(d);
    out.value = std::min(out.value, d);
  }
  if (out.skipped.size() == frames.size()) throw NumericalError("no frame yielded a homography");
  return out;
}

std::optional<double> stability_component(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n < kMinStabilityLength) return std::nullopt;
  // Least-squares line removal.
  double st = 0, sx = 0, stt = 0, stx = 0;
  for (int i = 0; i < n; ++i) {
    st += i;
    sx += x[i];
    stt += static_cast<double>(i) * i;
    stx += i * x[i];
  }
  const double slope = (n * stx - st * sx) / (n * stt - st * st);
  const double icept = (sx - slope * st) / n;
  std::vector<double> r(n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    r[i] = x[i] - (icept + slope * i);
    scale = std::max(scale, std::abs(x[i]));
  }
  double low = 0.0, all = 0.0;
  for (int f = 2; f <= n / 2; ++f) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * f * i / n;
      re += r[i] * std::cos(a);
      im -= r[i] * std::sin(a);
    }
    const double e = re * re + im * im;
    all += e;
    if (f <= 6) low += e;
  }
  const double floor = 1e-18 * (1.0 + scale * scale) * n * n;
  if (all <= floor) return 1.0;
  return std::clamp(low / all, 0.0, 1.0);
}

double stability(const TrackSet& tracks) {
  double sum = 0.0;
  int count = 0;
  for (const Track& t : tracks) {
    for (int axis = 0; axis < 2; ++axis) {
      const auto s = stability_component(longest_run(t, axis));
      if (!s) continue;
      sum += *s;
      ++count;
    }
  }
  if (count == 0) throw InputError("no track spans enough frames");
  return std::clamp(sum / count, 0.0, 1.0);
}

TrackSet project_tracks(const std::vector<Eigen::Vector3d>& points, const CameraIntrinsics& K,
                        const Trajectory& poses) {
  TrackSet out(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (const Pose& pose : poses) {
      const Projection pr = project(points[p], K, pose);
      if (pr.valid) {
        out[p].points.emplace_back(pr.pixel);
      } else {
        out[p].points.emplace_back(std::nullopt);
      }
    }
  }
  return out;
}

double gc_sparse(const std::vector<Eigen::Vector3d>& points, const std::vector<Observation>& observations,
                 const CameraIntrinsics& K, const Trajectory& poses) {
  double sum = 0.0;
  int count = 0;
  for (const Observation& o : observations) {
    if (o.point < 0 || o.point >= static_cast<int>(points.size()) || o.frame < 0 ||
        o.frame >= static_cast<int>(poses.size())) {
      throw InputError("observation index out of range");
    }
    const Projection pr = project(points[o.point], K, poses[o.frame]);
    if (!pr.valid) continue;
    sum += (pr.pixel - o.pixel).norm();
    ++count;
  }
  if (count == 0) throw InputError("no observations");
  return sum / count;
}

double psnr(const Image& a, const Image& b, const Mask* mask) {
  if (!a.same_shape(b) || (mask != nullptr && !a.same_extent(*mask))) throw InputError("shape mismatch");
  double se = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (mask != nullptr && !(*mask)(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a(x, y, c) - b(x, y, c);
        se += d * d;
        ++n;
      }
    }
  }
  if (n == 0) throw InputError("no pixels to compare");
  const double mse = se / n;
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double gc_dense(const std::vector<Image>& frames, const std::vector<GaussianScene>& scenes, const Trajectory& poses,
                const CameraIntrinsics& K, const std::vector<Mask>& dynamic_masks, int interval,
                const RenderSettings& settings) {
  const int T = static_cast<int>(frames.size());
  if (T < 16) throw InputError("dense consistency needs at least 16 frames");
  if (static_cast<int>(scenes.size()) != T || static_cast<int>(poses.size()) != T ||
      (!dynamic_masks.empty() && static_cast<int>(dynamic_masks.size()) != T)) {
    throw InputError("frame count mismatch");
  }
  if (interval < 2) throw InputError("holdout interval must be at least 2");
  std::vector<int> kept;
  for (int k = 0; k < T; ++k) {
    if (k % interval != 0) kept.push_back(k);
  }
  double sum = 0.0;
  int count = 0;
  for (int h = 0; h < T; h += interval) {
    std::vector<int> near = kept;
    std::stable_sort(near.begin(), near.end(), [h](int a, int b) { return std::abs(a - h) < std::abs(b - h); });
    Image pred(K.width, K.height, 3, 0.0);
    for (int n = 0; n < 2; ++n) {
      const RenderOutput r = render(scenes[near[n]], K, poses[h], settings);
      for (std::size_t i = 0; i < pred.data().size(); ++i) pred.data()[i] += 0.5 * r.color.data()[i];
    }
    Mask stat(K.width, K.height, 1);
    if (!dynamic_masks.empty()) {
      for (std::size_t i = 0; i < stat.size(); ++i) stat[i] = dynamic_masks[h][i] ? 0 : 1;
    }
    sum += psnr(pred, frames[h], &stat);
    ++count;
  }
  return sum / count;
}

}  // namespace splatstab
