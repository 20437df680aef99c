#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urb::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;

// WGS84 decimal degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

bool valid(const GeoPoint& p);

// Great-circle (haversine) distance in meters.
double distance_m(const GeoPoint& a, const GeoPoint& b);

// Closed ring: front() == back(), at least 4 vertices.
struct Ring {
  std::vector<GeoPoint> pts;
};

struct GeoPolygon {
  Ring exterior;
  std::vector<Ring> holes;
};

// MultiPolygon parts kept under a single id.
struct GeoShape {
  std::vector<GeoPolygon> parts;
};

// Ring closure, vertex count and self-intersection checks. Throws
// ValidationError; `what` names the offending geometry in messages.
void validate_polygon(const GeoPolygon& poly, const std::string& what = "polygon");
void validate_shape(const GeoShape& shape, const std::string& what = "shape");

// Even-odd ray cast over all rings; points exactly on any ring edge count as
// inside.
bool contains(const GeoPolygon& poly, const GeoPoint& p);
bool contains(const GeoShape& shape, const GeoPoint& p);

// Shoelace area after a local equirectangular projection about the geometry
// centroid; hole areas subtracted. Orientation-independent.
double planar_area_m2(const GeoPolygon& poly);
double planar_area_m2(const GeoShape& shape);

// Planar centroid (projected shoelace centroid, unprojected back). Falls back
// to the vertex mean for degenerate rings.
GeoPoint shape_centroid(const GeoShape& shape);

struct BBox {
  double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;
  bool contains(const GeoPoint& p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }
};

BBox bbox_of(const Ring& ring);
BBox bbox_of(const GeoShape& shape);

// Uniform-grid index over points. Immutable after build; queries are
// byte-for-byte deterministic for a given input order. Results are returned
// as ascending indices into the build-time point vector.
//
// Assumes city-scale data: longitudes are not allowed to wrap across the
// antimeridian inside one dataset.
class PointIndex {
 public:
  PointIndex() = default;

  static PointIndex build(std::vector<GeoPoint> pts);

  // All indexed points with distance_m(center, p) <= r_m (boundary
  // inclusive). r_m must be > 0.
  std::vector<std::uint32_t> radius_query(const GeoPoint& center, double r_m) const;

  // All indexed points inside the lon/lat rectangle (boundary inclusive).
  std::vector<std::uint32_t> bbox_query(const BBox& box) const;

  // Count-only variant of radius_query.
  size_t radius_count(const GeoPoint& center, double r_m) const;

  size_t size() const { return pts_.size(); }
  const GeoPoint& point(std::uint32_t id) const { return pts_[id]; }
  std::span<const GeoPoint> points() const { return pts_; }

 private:
  template <typename Fn>
  void visit_rect(const BBox& box, Fn&& fn) const;

  std::vector<GeoPoint> pts_;
  BBox box_{};
  int nx_ = 0, ny_ = 0;
  double cell_w_ = 0, cell_h_ = 0;
  std::vector<std::uint32_t> cell_start_;  // nx*ny + 1
  std::vector<std::uint32_t> items_;       // point ids grouped by cell
};

// Lon/lat rectangle guaranteed to cover the great-circle disc of radius r_m
// around center.
BBox radius_bound(const GeoPoint& center, double r_m);

// Grid index over shape bounding boxes for point-in-polygon assignment.
class ShapeIndex {
 public:
  struct Entry {
    std::string id;
    GeoShape shape;
    double area_m2 = 0;
  };

  ShapeIndex() = default;
  static ShapeIndex build(std::vector<Entry> entries);

  // Index of the containing entry, or nullopt. When several entries contain
  // the point (boundary overlaps), the smallest-area one wins and the
  // collision is logged.
  std::optional<std::uint32_t> locate(const GeoPoint& p) const;

  // All containing entries, ascending by entry index.
  std::vector<std::uint32_t> locate_all(const GeoPoint& p) const;

  size_t size() const { return entries_.size(); }
  const Entry& entry(std::uint32_t i) const { return entries_[i]; }

 private:
  std::vector<Entry> entries_;
  std::vector<BBox> bboxes_;
  BBox box_{};
  int nx_ = 0, ny_ = 0;
  double cell_w_ = 0, cell_h_ = 0;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> items_;
};

// Per-point containing unit (entry index into the ShapeIndex), nullopt for
// points inside no unit.
std::vector<std::optional<std::uint32_t>> assign_points_to_units(
    std::span<const GeoPoint> points, const ShapeIndex& units);

}  // namespace urb::geo
