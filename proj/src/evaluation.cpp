#include "pmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace pmap {

namespace {

using Triangle = std::array<Vec2, 3>;

// Signed fan triangulation from the first vertex. Summing sign * indicator
// over the fan reproduces the winding number of the polygon.
std::vector<std::pair<Triangle, double>> signed_fan(const TextPolygon& poly) {
  std::vector<std::pair<Triangle, double>> fan;
  const auto& vs = poly.vertices;
  for (std::size_t i = 1; i + 1 < vs.size(); ++i) {
    const Vec2& a = vs[0];
    const Vec2& b = vs[i];
    const Vec2& c = vs[i + 1];
    const double twice =
        (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (twice == 0.0) continue;
    fan.push_back({{a, b, c}, twice > 0 ? 1.0 : -1.0});
  }
  return fan;
}

double clip_area(const Triangle& subject, double subject_sign,
                 const Triangle& clip, double clip_sign) {
  // Sutherland-Hodgman; both triangles are convex. Orient each one CCW first.
  std::array<Vec2, 3> sub = subject;
  if (subject_sign < 0) std::swap(sub[1], sub[2]);
  std::array<Vec2, 3> clp = clip;
  if (clip_sign < 0) std::swap(clp[1], clp[2]);

  std::vector<Vec2> poly(sub.begin(), sub.end());
  std::vector<Vec2> next;
  for (int e = 0; e < 3 && !poly.empty(); ++e) {
    const Vec2& a = clp[e];
    const Vec2& b = clp[(e + 1) % 3];
    const Vec2 dir = b - a;
    auto side = [&](const Vec2& p) {
      return dir.x() * (p.y() - a.y()) - dir.y() * (p.x() - a.x());
    };
    next.clear();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = poly[i];
      const Vec2& nxt = poly[(i + 1) % n];
      const double sc = side(cur), sn = side(nxt);
      if (sc >= 0) next.push_back(cur);
      if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
        const double t = sc / (sc - sn);
        next.push_back(cur + t * (nxt - cur));
      }
    }
    poly = next;
  }
  if (poly.size() < 3) return 0.0;
  return std::abs(signed_area(poly));
}

}  // namespace

double polygon_area(const TextPolygon& poly) {
  return std::abs(signed_area(poly));
}

double polygon_intersection_area(const TextPolygon& a, const TextPolygon& b) {
  if (a.vertices.size() < 3 || b.vertices.size() < 3) {
    throw DegeneratePolygon("polygon_intersection_area: need >= 3 vertices");
  }
  const auto fan_a = signed_fan(a);
  const auto fan_b = signed_fan(b);
  const double orient_a = signed_area(a) >= 0 ? 1.0 : -1.0;
  const double orient_b = signed_area(b) >= 0 ? 1.0 : -1.0;

  double area = 0.0;
  for (const auto& [ta, sa] : fan_a) {
    for (const auto& [tb, sb] : fan_b) {
      const double piece = clip_area(ta, sa, tb, sb);
      if (piece > 0.0) area += sa * sb * piece;
    }
  }
  // Winding of a simple CW polygon is -1 inside; normalize to a plain area.
  area *= orient_a * orient_b;
  return std::max(area, 0.0);
}

double polygon_iou(const TextPolygon& a, const TextPolygon& b) {
  const double area_a = polygon_area(a);
  const double area_b = polygon_area(b);
  if (area_a == 0.0 || area_b == 0.0) {
    throw DegeneratePolygon("polygon_iou: zero-area polygon");
  }
  const double inter = std::min(polygon_intersection_area(a, b),
                                std::min(area_a, area_b));
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

int MatchReport::total_tp() const {
  int s = 0;
  for (const auto& c : per_image) s += c.tp;
  return s;
}
int MatchReport::total_fp() const {
  int s = 0;
  for (const auto& c : per_image) s += c.fp;
  return s;
}
int MatchReport::total_fn() const {
  int s = 0;
  for (const auto& c : per_image) s += c.fn;
  return s;
}

MatchReport match_and_score(const std::vector<ImageDetections>& detections,
                            const std::vector<ImageAnnotations>& ground_truth,
                            double iou_threshold) {
  std::map<std::string, const ImageAnnotations*> gt_by_image;
  for (const ImageAnnotations& g : ground_truth) gt_by_image[g.image] = &g;
  std::map<std::string, const ImageDetections*> det_by_image;
  for (const ImageDetections& d : detections) {
    if (!gt_by_image.count(d.image)) {
      throw Error("match_and_score: no ground truth for image key '" + d.image + "'");
    }
    det_by_image[d.image] = &d;
  }

  MatchReport report;
  report.iou_threshold = iou_threshold;

  for (const ImageAnnotations& gt : ground_truth) {
    ImageCounts counts;
    counts.image = gt.image;

    const ImageDetections* dets = nullptr;
    if (auto it = det_by_image.find(gt.image); it != det_by_image.end()) {
      dets = it->second;
    }

    std::vector<std::size_t> order;
    if (dets) {
      order.resize(dets->detections.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets->detections[a].score > dets->detections[b].score;
      });
    }

    std::vector<char> gt_taken(gt.instances.size(), 0);
    for (std::size_t oi : order) {
      const TextPolygon& det_poly = dets->detections[oi].polygon;
      double best_iou = 0.0;
      std::size_t best_gt = gt.instances.size();
      for (std::size_t gi = 0; gi < gt.instances.size(); ++gi) {
        if (gt_taken[gi] || gt.instances[gi].ignore) continue;
        const double iou = polygon_iou(det_poly, gt.instances[gi]);
        if (iou > best_iou) {
          best_iou = iou;
          best_gt = gi;
        }
      }
      if (best_gt < gt.instances.size() && best_iou >= iou_threshold) {
        gt_taken[best_gt] = 1;
        ++counts.tp;
        continue;
      }
      // Unmatched: a hit on a don't-care region is neither tp nor fp.
      bool ignored = false;
      for (const TextPolygon& inst : gt.instances) {
        if (inst.ignore && polygon_iou(det_poly, inst) >= iou_threshold) {
          ignored = true;
          break;
        }
      }
      if (!ignored) ++counts.fp;
    }
    for (std::size_t gi = 0; gi < gt.instances.size(); ++gi) {
      if (!gt.instances[gi].ignore && !gt_taken[gi]) ++counts.fn;
    }
    report.per_image.push_back(std::move(counts));
  }

  const double tp = report.total_tp();
  const double fp = report.total_fp();
  const double fn = report.total_fn();
  report.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  report.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  report.f_measure = report.precision + report.recall > 0
                         ? 2.0 * report.precision * report.recall /
                               (report.precision + report.recall)
                         : 0.0;
  return report;
}

}  // namespace pmap
