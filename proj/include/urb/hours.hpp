#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urb::hours {

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kMinutesPerWeek = 10080;

// Half-open minute interval on the Monday-00:00-origin week, [begin, end)
// with 0 <= begin < end <= 10080.
struct Interval {
  int begin = 0;
  int end = 0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

class WeeklySchedule {
 public:
  WeeklySchedule() = default;

  // Normalizes arbitrary in-range intervals: sorts, merges overlapping and
  // touching ones, drops empties.
  static WeeklySchedule from_intervals(std::vector<Interval> raw);

  const std::vector<Interval>& intervals() const { return open_; }
  int total_minutes() const;

  // Minutes of overlap with a set of disjoint window intervals.
  int overlap_minutes(std::span<const Interval> window) const;

  bool empty() const { return open_.empty(); }
  friend bool operator==(const WeeklySchedule&, const WeeklySchedule&) = default;

 private:
  std::vector<Interval> open_;  // disjoint, sorted
};

struct TimeWindow {
  std::string name;
  std::vector<Interval> intervals;  // disjoint, sorted, within [0, 10080)
  int total_minutes() const;
};

TimeWindow whole_week();
TimeWindow weekday_evenings();  // Mon-Fri 18:00-24:00
TimeWindow weekend_nights();    // Sat and Sun 00:00-04:00

bool in_window(int week_minute, const TimeWindow& w);

// Day keys accepted in hours maps, in week order.
extern const std::array<std::string, 7> kDayKeys;  // mon..sun

// Per-day opening strings to a normalized schedule. Each entry is a list of
// "HH:MM-HH:MM" tokens or the single token "closed"; an end at or before the
// start wraps overnight, and spans past Sunday midnight are split at the week
// boundary. Returns nullopt (with a message in *err) on any unparseable
// token; callers keep the record and drop only the schedule.
std::optional<WeeklySchedule> parse_hours(
    const std::map<std::string, std::vector<std::string>>& per_day, std::string* err = nullptr);

// "HH:MM" (24:00 allowed) to minute-of-day, or -1.
int parse_clock(const std::string& token);

}  // namespace urb::hours
