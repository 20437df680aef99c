#include "urb/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "urb/error.hpp"
#include "urb/log.hpp"

namespace urb::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double sq(double x) { return x * x; }

// True iff p lies exactly on segment [a, b] under double arithmetic.
bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (cross != 0.0) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

// Ray cast east from p: number of ring edges strictly crossed.
// Half-open vertex rule keeps crossings consistent at shared vertices.
int ring_crossings(const Ring& ring, const GeoPoint& p) {
  int crossings = 0;
  const auto& v = ring.pts;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const GeoPoint& a = v[j];
    const GeoPoint& b = v[i];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
      if (p.lon < x) ++crossings;
    }
  }
  return crossings;
}

bool ring_has_edge_point(const Ring& ring, const GeoPoint& p) {
  const auto& v = ring.pts;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if (on_segment(v[j], v[i], p)) return true;
  }
  return false;
}

int orient(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
  double d = (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
  return d > 0 ? 1 : (d < 0 ? -1 : 0);
}

bool segments_properly_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c,
                                 const GeoPoint& d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

void validate_ring(const Ring& ring, const std::string& what) {
  const auto& v = ring.pts;
  if (v.size() < 4) {
    throw ValidationError(what + ": ring has fewer than 4 vertices");
  }
  if (v.front().lon != v.back().lon || v.front().lat != v.back().lat) {
    throw ValidationError(what + ": ring is not closed (first != last vertex)");
  }
  for (const GeoPoint& p : v) {
    if (!valid(p)) {
      throw ValidationError(what + ": vertex outside lon/lat bounds");
    }
  }
  // Proper crossings between non-adjacent edges. Edge count n-1 (closed ring).
  size_t n = v.size() - 1;
  for (size_t i = 0; i < n; ++i) {
    double ilo_lon = std::min(v[i].lon, v[i + 1].lon), ihi_lon = std::max(v[i].lon, v[i + 1].lon);
    double ilo_lat = std::min(v[i].lat, v[i + 1].lat), ihi_lat = std::max(v[i].lat, v[i + 1].lat);
    for (size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through closure
      if (std::max(v[j].lon, v[j + 1].lon) < ilo_lon || std::min(v[j].lon, v[j + 1].lon) > ihi_lon ||
          std::max(v[j].lat, v[j + 1].lat) < ilo_lat || std::min(v[j].lat, v[j + 1].lat) > ihi_lat) {
        continue;
      }
      if (segments_properly_intersect(v[i], v[i + 1], v[j], v[j + 1])) {
        throw ValidationError(what + ": ring is self-intersecting");
      }
    }
  }
}

struct Projector {
  double lon0, lat0, coslat0;
  explicit Projector(const GeoPoint& origin)
      : lon0(origin.lon), lat0(origin.lat), coslat0(std::cos(origin.lat * kDegToRad)) {}
  double x(const GeoPoint& p) const { return kEarthRadiusM * (p.lon - lon0) * kDegToRad * coslat0; }
  double y(const GeoPoint& p) const { return kEarthRadiusM * (p.lat - lat0) * kDegToRad; }
};

double ring_signed_area(const Ring& ring, const Projector& proj) {
  double acc = 0;
  const auto& v = ring.pts;
  for (size_t i = 0; i + 1 < v.size(); ++i) {
    acc += proj.x(v[i]) * proj.y(v[i + 1]) - proj.x(v[i + 1]) * proj.y(v[i]);
  }
  return acc / 2.0;
}

GeoPoint vertex_mean(const GeoShape& shape) {
  double lon = 0, lat = 0;
  size_t n = 0;
  for (const auto& part : shape.parts) {
    const auto& v = part.exterior.pts;
    for (size_t i = 0; i + 1 < v.size(); ++i) {  // skip the closing vertex
      lon += v[i].lon;
      lat += v[i].lat;
      ++n;
    }
  }
  if (n == 0) return {};
  return {lon / n, lat / n};
}

int grid_side(size_t n, int cap) {
  int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(std::max<size_t>(n, 1)))));
  return std::clamp(side, 1, cap);
}

}  // namespace

bool valid(const GeoPoint& p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

double distance_m(const GeoPoint& a, const GeoPoint& b) {
  double phi1 = a.lat * kDegToRad;
  double phi2 = b.lat * kDegToRad;
  double dphi = (b.lat - a.lat) * kDegToRad;
  double dlambda = (b.lon - a.lon) * kDegToRad;
  double h = sq(std::sin(dphi / 2)) + std::cos(phi1) * std::cos(phi2) * sq(std::sin(dlambda / 2));
  h = std::min(1.0, h);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

void validate_polygon(const GeoPolygon& poly, const std::string& what) {
  validate_ring(poly.exterior, what);
  for (size_t i = 0; i < poly.holes.size(); ++i) {
    validate_ring(poly.holes[i], what + " hole " + std::to_string(i));
  }
}

void validate_shape(const GeoShape& shape, const std::string& what) {
  if (shape.parts.empty()) throw ValidationError(what + ": empty geometry");
  for (size_t i = 0; i < shape.parts.size(); ++i) {
    validate_polygon(shape.parts[i], what + " part " + std::to_string(i));
  }
}

bool contains(const GeoPolygon& poly, const GeoPoint& p) {
  if (ring_has_edge_point(poly.exterior, p)) return true;
  for (const Ring& h : poly.holes) {
    if (ring_has_edge_point(h, p)) return true;
  }
  int crossings = ring_crossings(poly.exterior, p);
  for (const Ring& h : poly.holes) {
    crossings += ring_crossings(h, p);
  }
  return (crossings % 2) == 1;
}

bool contains(const GeoShape& shape, const GeoPoint& p) {
  for (const GeoPolygon& part : shape.parts) {
    if (contains(part, p)) return true;
  }
  return false;
}

double planar_area_m2(const GeoPolygon& poly) {
  GeoShape s;
  s.parts.push_back(poly);
  Projector proj(vertex_mean(s));
  double area = std::abs(ring_signed_area(poly.exterior, proj));
  for (const Ring& h : poly.holes) {
    area -= std::abs(ring_signed_area(h, proj));
  }
  return std::max(0.0, area);
}

double planar_area_m2(const GeoShape& shape) {
  Projector proj(vertex_mean(shape));
  double area = 0;
  for (const GeoPolygon& part : shape.parts) {
    double a = std::abs(ring_signed_area(part.exterior, proj));
    for (const Ring& h : part.holes) {
      a -= std::abs(ring_signed_area(h, proj));
    }
    area += std::max(0.0, a);
  }
  return area;
}

GeoPoint shape_centroid(const GeoShape& shape) {
  GeoPoint origin = vertex_mean(shape);
  Projector proj(origin);
  // Area-weighted mean of per-part shoelace centroids; part centroid is
  // (sx/(3*a2), sy/(3*a2)) with a2 = twice the signed area.
  double acc_x = 0, acc_y = 0, acc_area = 0;
  for (const GeoPolygon& part : shape.parts) {
    const auto& v = part.exterior.pts;
    double a2 = 0, sx = 0, sy = 0;
    for (size_t i = 0; i + 1 < v.size(); ++i) {
      double x0 = proj.x(v[i]), y0 = proj.y(v[i]);
      double x1 = proj.x(v[i + 1]), y1 = proj.y(v[i + 1]);
      double w = x0 * y1 - x1 * y0;
      a2 += w;
      sx += (x0 + x1) * w;
      sy += (y0 + y1) * w;
    }
    if (a2 != 0) {
      double area = std::abs(a2) / 2.0;
      acc_x += area * (sx / (3.0 * a2));
      acc_y += area * (sy / (3.0 * a2));
      acc_area += area;
    }
  }
  if (acc_area == 0) return origin;
  double x = acc_x / acc_area;
  double y = acc_y / acc_area;
  GeoPoint p;
  p.lon = origin.lon + x / (kEarthRadiusM * proj.coslat0) / kDegToRad;
  p.lat = origin.lat + y / kEarthRadiusM / kDegToRad;
  return p;
}

BBox bbox_of(const Ring& ring) {
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const GeoPoint& p : ring.pts) {
    b.min_lon = std::min(b.min_lon, p.lon);
    b.min_lat = std::min(b.min_lat, p.lat);
    b.max_lon = std::max(b.max_lon, p.lon);
    b.max_lat = std::max(b.max_lat, p.lat);
  }
  return b;
}

BBox bbox_of(const GeoShape& shape) {
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const GeoPolygon& part : shape.parts) {
    BBox pb = bbox_of(part.exterior);
    b.min_lon = std::min(b.min_lon, pb.min_lon);
    b.min_lat = std::min(b.min_lat, pb.min_lat);
    b.max_lon = std::max(b.max_lon, pb.max_lon);
    b.max_lat = std::max(b.max_lat, pb.max_lat);
  }
  return b;
}

BBox radius_bound(const GeoPoint& center, double r_m) {
  // d >= R*|dphi|, so the lat band is exact. The lon band uses the
  // poleward-most latitude the disc can reach.
  double dphi = r_m / kEarthRadiusM;  // radians
  double dlat = dphi / kDegToRad;
  double lat_lo = std::max(-90.0, center.lat - dlat);
  double lat_hi = std::min(90.0, center.lat + dlat);
  double phi_max = std::max(std::abs(lat_lo), std::abs(lat_hi)) * kDegToRad;
  double cos_max = std::cos(std::min(phi_max, 89.9999 * kDegToRad));
  double s = std::sin(dphi / 2) / cos_max;
  double dlon;
  if (s >= 1.0) {
    dlon = 360.0;
  } else {
    dlon = 2.0 * std::asin(s) / kDegToRad;
  }
  return BBox{center.lon - dlon, lat_lo, center.lon + dlon, lat_hi};
}

PointIndex PointIndex::build(std::vector<GeoPoint> pts) {
  PointIndex idx;
  idx.pts_ = std::move(pts);
  size_t n = idx.pts_.size();
  if (n == 0) {
    idx.nx_ = idx.ny_ = 1;
    idx.cell_w_ = idx.cell_h_ = 1;
    idx.cell_start_ = {0, 0};
    return idx;
  }
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const GeoPoint& p : idx.pts_) {
    b.min_lon = std::min(b.min_lon, p.lon);
    b.min_lat = std::min(b.min_lat, p.lat);
    b.max_lon = std::max(b.max_lon, p.lon);
    b.max_lat = std::max(b.max_lat, p.lat);
  }
  idx.box_ = b;
  idx.nx_ = idx.ny_ = grid_side(n, 2048);
  idx.cell_w_ = (b.max_lon - b.min_lon) / idx.nx_;
  idx.cell_h_ = (b.max_lat - b.min_lat) / idx.ny_;
  if (idx.cell_w_ <= 0) idx.cell_w_ = 1;
  if (idx.cell_h_ <= 0) idx.cell_h_ = 1;

  auto cell_of = [&](const GeoPoint& p) {
    int cx = std::min(idx.nx_ - 1, static_cast<int>((p.lon - b.min_lon) / idx.cell_w_));
    int cy = std::min(idx.ny_ - 1, static_cast<int>((p.lat - b.min_lat) / idx.cell_h_));
    return static_cast<size_t>(cy) * idx.nx_ + cx;
  };

  size_t ncells = static_cast<size_t>(idx.nx_) * idx.ny_;
  std::vector<std::uint32_t> counts(ncells, 0);
  for (const GeoPoint& p : idx.pts_) ++counts[cell_of(p)];
  idx.cell_start_.assign(ncells + 1, 0);
  for (size_t c = 0; c < ncells; ++c) idx.cell_start_[c + 1] = idx.cell_start_[c] + counts[c];
  idx.items_.resize(n);
  std::vector<std::uint32_t> cursor(idx.cell_start_.begin(), idx.cell_start_.end() - 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    idx.items_[cursor[cell_of(idx.pts_[i])]++] = i;
  }
  // Ascending ids within each cell so query output order is canonical.
  for (size_t c = 0; c < ncells; ++c) {
    std::sort(idx.items_.begin() + idx.cell_start_[c], idx.items_.begin() + idx.cell_start_[c + 1]);
  }
  return idx;
}

template <typename Fn>
void PointIndex::visit_rect(const BBox& box, Fn&& fn) const {
  if (pts_.empty()) return;
  if (box.max_lon < box_.min_lon || box.min_lon > box_.max_lon || box.max_lat < box_.min_lat ||
      box.min_lat > box_.max_lat) {
    return;
  }
  auto clampi = [](int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); };
  int cx0 = clampi(static_cast<int>((box.min_lon - box_.min_lon) / cell_w_), 0, nx_ - 1);
  int cx1 = clampi(static_cast<int>((box.max_lon - box_.min_lon) / cell_w_), 0, nx_ - 1);
  int cy0 = clampi(static_cast<int>((box.min_lat - box_.min_lat) / cell_h_), 0, ny_ - 1);
  int cy1 = clampi(static_cast<int>((box.max_lat - box_.min_lat) / cell_h_), 0, ny_ - 1);
  for (int cy = cy0; cy <= cy1; ++cy) {
    for (int cx = cx0; cx <= cx1; ++cx) {
      size_t c = static_cast<size_t>(cy) * nx_ + cx;
      for (std::uint32_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
        fn(items_[k]);
      }
    }
  }
}

std::vector<std::uint32_t> PointIndex::radius_query(const GeoPoint& center, double r_m) const {
  if (!(r_m > 0)) throw ValidationError("radius_query: radius must be > 0");
  std::vector<std::uint32_t> out;
  BBox bound = radius_bound(center, r_m);
  visit_rect(bound, [&](std::uint32_t id) {
    if (distance_m(center, pts_[id]) <= r_m) out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

size_t PointIndex::radius_count(const GeoPoint& center, double r_m) const {
  if (!(r_m > 0)) throw ValidationError("radius_count: radius must be > 0");
  size_t n = 0;
  BBox bound = radius_bound(center, r_m);
  visit_rect(bound, [&](std::uint32_t id) {
    if (distance_m(center, pts_[id]) <= r_m) ++n;
  });
  return n;
}

std::vector<std::uint32_t> PointIndex::bbox_query(const BBox& box) const {
  std::vector<std::uint32_t> out;
  visit_rect(box, [&](std::uint32_t id) {
    if (box.contains(pts_[id])) out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

ShapeIndex ShapeIndex::build(std::vector<Entry> entries) {
  ShapeIndex idx;
  idx.entries_ = std::move(entries);
  size_t n = idx.entries_.size();
  idx.bboxes_.reserve(n);
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Entry& e : idx.entries_) {
    BBox eb = bbox_of(e.shape);
    idx.bboxes_.push_back(eb);
    b.min_lon = std::min(b.min_lon, eb.min_lon);
    b.min_lat = std::min(b.min_lat, eb.min_lat);
    b.max_lon = std::max(b.max_lon, eb.max_lon);
    b.max_lat = std::max(b.max_lat, eb.max_lat);
  }
  if (n == 0) {
    idx.nx_ = idx.ny_ = 1;
    idx.cell_w_ = idx.cell_h_ = 1;
    idx.cell_start_ = {0, 0};
    return idx;
  }
  idx.box_ = b;
  idx.nx_ = idx.ny_ = grid_side(n, 1024);
  idx.cell_w_ = (b.max_lon - b.min_lon) / idx.nx_;
  idx.cell_h_ = (b.max_lat - b.min_lat) / idx.ny_;
  if (idx.cell_w_ <= 0) idx.cell_w_ = 1;
  if (idx.cell_h_ <= 0) idx.cell_h_ = 1;

  auto cell_range = [&](const BBox& eb, int& cx0, int& cx1, int& cy0, int& cy1) {
    auto clampi = [](int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); };
    cx0 = clampi(static_cast<int>((eb.min_lon - b.min_lon) / idx.cell_w_), 0, idx.nx_ - 1);
    cx1 = clampi(static_cast<int>((eb.max_lon - b.min_lon) / idx.cell_w_), 0, idx.nx_ - 1);
    cy0 = clampi(static_cast<int>((eb.min_lat - b.min_lat) / idx.cell_h_), 0, idx.ny_ - 1);
    cy1 = clampi(static_cast<int>((eb.max_lat - b.min_lat) / idx.cell_h_), 0, idx.ny_ - 1);
  };

  size_t ncells = static_cast<size_t>(idx.nx_) * idx.ny_;
  std::vector<std::uint32_t> counts(ncells, 0);
  for (size_t i = 0; i < n; ++i) {
    int cx0, cx1, cy0, cy1;
    cell_range(idx.bboxes_[i], cx0, cx1, cy0, cy1);
    for (int cy = cy0; cy <= cy1; ++cy)
      for (int cx = cx0; cx <= cx1; ++cx) ++counts[static_cast<size_t>(cy) * idx.nx_ + cx];
  }
  idx.cell_start_.assign(ncells + 1, 0);
  for (size_t c = 0; c < ncells; ++c) idx.cell_start_[c + 1] = idx.cell_start_[c] + counts[c];
  idx.items_.resize(idx.cell_start_.back());
  std::vector<std::uint32_t> cursor(idx.cell_start_.begin(), idx.cell_start_.end() - 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    int cx0, cx1, cy0, cy1;
    cell_range(idx.bboxes_[i], cx0, cx1, cy0, cy1);
    for (int cy = cy0; cy <= cy1; ++cy)
      for (int cx = cx0; cx <= cx1; ++cx)
        idx.items_[cursor[static_cast<size_t>(cy) * idx.nx_ + cx]++] = i;
  }
  return idx;
}

std::vector<std::uint32_t> ShapeIndex::locate_all(const GeoPoint& p) const {
  std::vector<std::uint32_t> out;
  if (entries_.empty()) return out;
  if (!box_.contains(p)) return out;
  int cx = std::clamp(static_cast<int>((p.lon - box_.min_lon) / cell_w_), 0, nx_ - 1);
  int cy = std::clamp(static_cast<int>((p.lat - box_.min_lat) / cell_h_), 0, ny_ - 1);
  size_t c = static_cast<size_t>(cy) * nx_ + cx;
  for (std::uint32_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
    std::uint32_t i = items_[k];
    if (bboxes_[i].contains(p) && contains(entries_[i].shape, p)) {
      out.push_back(i);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::uint32_t> ShapeIndex::locate(const GeoPoint& p) const {
  std::vector<std::uint32_t> hits = locate_all(p);
  if (hits.empty()) return std::nullopt;
  if (hits.size() > 1) {
    std::uint32_t best = hits[0];
    for (std::uint32_t i : hits) {
      if (entries_[i].area_m2 < entries_[best].area_m2) best = i;
    }
    log::debug("overlap collision: point in ", hits.size(), " units, keeping smallest-area id=",
               entries_[best].id);
    return best;
  }
  return hits[0];
}

std::vector<std::optional<std::uint32_t>> assign_points_to_units(
    std::span<const GeoPoint> points, const ShapeIndex& units) {
  std::vector<std::optional<std::uint32_t>> out;
  out.reserve(points.size());
  for (const GeoPoint& p : points) {
    out.push_back(units.locate(p));
  }
  return out;
}

}  // namespace urb::geo
