#include "urb/hours.hpp"

#include <algorithm>
#include <array>

#include "urb/util.hpp"

namespace urb::hours {

const std::array<std::string, 7> kDayKeys = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};

WeeklySchedule WeeklySchedule::from_intervals(std::vector<Interval> raw) {
  std::erase_if(raw, [](const Interval& iv) { return iv.end <= iv.begin; });
  std::sort(raw.begin(), raw.end(),
            [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  WeeklySchedule s;
  for (const Interval& iv : raw) {
    if (!s.open_.empty() && iv.begin <= s.open_.back().end) {
      s.open_.back().end = std::max(s.open_.back().end, iv.end);
    } else {
      s.open_.push_back(iv);
    }
  }
  return s;
}

int WeeklySchedule::total_minutes() const {
  int total = 0;
  for (const Interval& iv : open_) total += iv.end - iv.begin;
  return total;
}

int WeeklySchedule::overlap_minutes(std::span<const Interval> window) const {
  int total = 0;
  size_t i = 0, j = 0;
  while (i < open_.size() && j < window.size()) {
    int lo = std::max(open_[i].begin, window[j].begin);
    int hi = std::min(open_[i].end, window[j].end);
    if (hi > lo) total += hi - lo;
    if (open_[i].end < window[j].end) ++i;
    else ++j;
  }
  return total;
}

int TimeWindow::total_minutes() const {
  int total = 0;
  for (const Interval& iv : intervals) total += iv.end - iv.begin;
  return total;
}

TimeWindow whole_week() { return {"whole_week", {{0, kMinutesPerWeek}}}; }

TimeWindow weekday_evenings() {
  TimeWindow w{"weekday_evenings", {}};
  for (int d = 0; d < 5; ++d) {
    w.intervals.push_back({d * kMinutesPerDay + 18 * 60, (d + 1) * kMinutesPerDay});
  }
  return w;
}

TimeWindow weekend_nights() {
  TimeWindow w{"weekend_nights", {}};
  w.intervals.push_back({5 * kMinutesPerDay, 5 * kMinutesPerDay + 4 * 60});
  w.intervals.push_back({6 * kMinutesPerDay, 6 * kMinutesPerDay + 4 * 60});
  return w;
}

bool in_window(int week_minute, const TimeWindow& w) {
  for (const Interval& iv : w.intervals) {
    if (week_minute >= iv.begin && week_minute < iv.end) return true;
  }
  return false;
}

int parse_clock(const std::string& token) {
  auto parts = split(token, ':');
  if (parts.size() != 2) return -1;
  auto h = parse_int(parts[0]);
  auto m = parse_int(parts[1]);
  if (!h || !m || *h < 0 || *h > 24 || *m < 0 || *m > 59) return -1;
  if (*h == 24 && *m != 0) return -1;
  return static_cast<int>(*h * 60 + *m);
}

std::optional<WeeklySchedule> parse_hours(
    const std::map<std::string, std::vector<std::string>>& per_day, std::string* err) {
  std::vector<Interval> raw;
  for (const auto& [key, tokens] : per_day) {
    std::string day = to_lower_ascii(trim(key));
    auto it = std::find(kDayKeys.begin(), kDayKeys.end(), day);
    if (it == kDayKeys.end()) {
      if (err) *err = "unknown day key '" + key + "'";
      return std::nullopt;
    }
    int day_idx = static_cast<int>(it - kDayKeys.begin());
    for (const std::string& tok : tokens) {
      std::string t = to_lower_ascii(trim(tok));
      if (t.empty() || t == "closed") continue;
      auto dash = t.find('-');
      if (dash == std::string::npos) {
        if (err) *err = "unparseable hours token '" + tok + "'";
        return std::nullopt;
      }
      int from = parse_clock(t.substr(0, dash));
      int to = parse_clock(t.substr(dash + 1));
      if (from < 0 || to < 0) {
        if (err) *err = "unparseable hours token '" + tok + "'";
        return std::nullopt;
      }
      int begin = day_idx * kMinutesPerDay + from;
      // End at or before start means the interval runs into the next day;
      // "00:00-00:00" therefore reads as open the full day.
      int end = to > from ? day_idx * kMinutesPerDay + to : (day_idx + 1) * kMinutesPerDay + to;
      if (end > kMinutesPerWeek) {
        raw.push_back({begin, kMinutesPerWeek});
        raw.push_back({0, end - kMinutesPerWeek});
      } else {
        raw.push_back({begin, end});
      }
    }
  }
  return WeeklySchedule::from_intervals(std::move(raw));
}

}  // namespace urb::hours
