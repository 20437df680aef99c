#include "urb/domain.hpp"

#include <chrono>
#include <cstdio>
#include <map>

#include "urb/util.hpp"

namespace urb {

std::string to_string(UnitLevel level) {
  return level == UnitLevel::block ? "block" : "block_group";
}

std::optional<UnitLevel> unit_level_from_string(const std::string& s) {
  std::string v = to_lower_ascii(trim(s));
  if (v == "block") return UnitLevel::block;
  if (v == "block_group" || v == "blockgroup" || v == "block group") return UnitLevel::block_group;
  return std::nullopt;
}

std::string to_string(Zoning z) {
  switch (z) {
    case Zoning::commercial: return "commercial";
    case Zoning::residential: return "residential";
    case Zoning::mixed_use: return "mixed_use";
    case Zoning::industrial: return "industrial";
    case Zoning::vacant: return "vacant";
    case Zoning::transportation: return "transportation";
    case Zoning::water: return "water";
    case Zoning::park: return "park";
    case Zoning::civic: return "civic";
    case Zoning::recreation: return "recreation";
    case Zoning::culture: return "culture";
    case Zoning::cemetery: return "cemetery";
  }
  return "?";
}

std::optional<Zoning> zoning_from_raw(const std::string& raw) {
  // Collapse whitespace and slashes so "Commercial / Residential Mixed"
  // and "commercial residential mixed" normalize identically.
  std::string v = to_lower_ascii(trim(raw));
  std::string norm;
  bool pending_space = false;
  for (char c : v) {
    if (c == ' ' || c == '/' || c == '\t' || c == '_') {
      pending_space = !norm.empty();
      continue;
    }
    if (pending_space) {
      norm.push_back(' ');
      pending_space = false;
    }
    norm.push_back(c);
  }
  static const std::map<std::string, Zoning> table = {
      {"commercial", Zoning::commercial},
      {"commercial business", Zoning::commercial},
      {"commercial consumer", Zoning::commercial},
      {"residential", Zoning::residential},
      {"residential low", Zoning::residential},
      {"residential medium", Zoning::residential},
      {"residential high", Zoning::residential},
      {"mixed use", Zoning::mixed_use},
      {"mixeduse", Zoning::mixed_use},
      {"commercial residential mixed", Zoning::mixed_use},
      {"industrial", Zoning::industrial},
      {"vacant", Zoning::vacant},
      {"transportation", Zoning::transportation},
      {"water", Zoning::water},
      {"park", Zoning::park},
      {"civic", Zoning::civic},
      {"recreation", Zoning::recreation},
      {"culture", Zoning::culture},
      {"cemetery", Zoning::cemetery},
  };
  auto it = table.find(norm);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

CrimeSuper super_of(CrimeCategory c) {
  switch (c) {
    case CrimeCategory::homicide:
    case CrimeCategory::sexual:
    case CrimeCategory::robbery:
    case CrimeCategory::assault:
      return CrimeSuper::violent;
    default:
      return CrimeSuper::non_violent;
  }
}

std::string to_string(CrimeCategory c) {
  switch (c) {
    case CrimeCategory::homicide: return "Homicide";
    case CrimeCategory::sexual: return "Sexual";
    case CrimeCategory::robbery: return "Robbery";
    case CrimeCategory::assault: return "Assault";
    case CrimeCategory::burglary: return "Burglary";
    case CrimeCategory::theft: return "Theft";
    case CrimeCategory::motor_theft: return "Motor Theft";
    case CrimeCategory::arson: return "Arson";
    case CrimeCategory::vandalism: return "Vandalism";
    case CrimeCategory::disorderly_conduct: return "Disorderly Conduct";
  }
  return "?";
}

std::string to_string(CrimeSuper s) {
  return s == CrimeSuper::violent ? "violent" : "non_violent";
}

std::optional<CrimeCategory> crime_category_from_string(const std::string& s) {
  std::string v = to_lower_ascii(trim(s));
  for (char& c : v) {
    if (c == '_') c = ' ';
  }
  static const std::map<std::string, CrimeCategory> table = {
      {"homicide", CrimeCategory::homicide},
      {"sexual", CrimeCategory::sexual},
      {"robbery", CrimeCategory::robbery},
      {"assault", CrimeCategory::assault},
      {"burglary", CrimeCategory::burglary},
      {"theft", CrimeCategory::theft},
      {"motor theft", CrimeCategory::motor_theft},
      {"arson", CrimeCategory::arson},
      {"vandalism", CrimeCategory::vandalism},
      {"disorderly conduct", CrimeCategory::disorderly_conduct},
  };
  auto it = table.find(v);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

namespace {

bool valid_civil_date(int y, int m, int d) {
  namespace chr = std::chrono;
  if (y < 1800 || y > 2500 || m < 1 || m > 12 || d < 1 || d > 31) return false;
  chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                          chr::day{static_cast<unsigned>(d)}};
  return ymd.ok();
}

}  // namespace

std::optional<CivilDate> parse_date(const std::string& s) {
  std::string v(trim(s));
  if (v.size() != 10 || v[4] != '-' || v[7] != '-') return std::nullopt;
  auto y = parse_int(v.substr(0, 4));
  auto m = parse_int(v.substr(5, 2));
  auto d = parse_int(v.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  if (!valid_civil_date(static_cast<int>(*y), static_cast<int>(*m), static_cast<int>(*d))) {
    return std::nullopt;
  }
  return CivilDate{static_cast<int>(*y), static_cast<int>(*m), static_cast<int>(*d)};
}

std::optional<CivilDateTime> parse_datetime(const std::string& s) {
  std::string v(trim(s));
  if (v.size() < 16) return std::nullopt;
  auto date = parse_date(v.substr(0, 10));
  if (!date) return std::nullopt;
  if (v[10] != 'T' && v[10] != ' ') return std::nullopt;
  std::string rest = v.substr(11);
  // Explicit UTC designators are rejected rather than silently misread.
  if (rest.find('Z') != std::string::npos || rest.find('z') != std::string::npos ||
      rest.find('+') != std::string::npos) {
    return std::nullopt;
  }
  // A '-' past the date part would be an offset too.
  if (rest.find('-') != std::string::npos) return std::nullopt;
  auto parts = split(rest, ':');
  if (parts.size() != 2 && parts.size() != 3) return std::nullopt;
  auto h = parse_int(parts[0]);
  auto m = parse_int(parts[1]);
  long long sec = 0;
  if (parts.size() == 3) {
    // Fractional seconds tolerated and truncated.
    auto dot = parts[2].find('.');
    auto sv = dot == std::string::npos ? parts[2] : parts[2].substr(0, dot);
    auto ss = parse_int(sv);
    if (!ss) return std::nullopt;
    sec = *ss;
  }
  if (!h || !m || *h < 0 || *h > 23 || *m < 0 || *m > 59 || sec < 0 || sec > 60) {
    return std::nullopt;
  }
  return CivilDateTime{*date, static_cast<int>(*h), static_cast<int>(*m), static_cast<int>(sec)};
}

std::string to_string(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string to_string(const CivilDateTime& t) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", t.date.year, t.date.month,
                t.date.day, t.hour, t.minute, t.second);
  return buf;
}

int minute_of_week(const CivilDateTime& t) {
  namespace chr = std::chrono;
  chr::year_month_day ymd{chr::year{t.date.year}, chr::month{static_cast<unsigned>(t.date.month)},
                          chr::day{static_cast<unsigned>(t.date.day)}};
  chr::weekday wd{chr::sys_days{ymd}};
  int day_idx = static_cast<int>(wd.iso_encoding()) - 1;  // Monday = 0
  return day_idx * hours::kMinutesPerDay + t.hour * 60 + t.minute;
}

long long days_between(const CivilDate& a, const CivilDate& b) {
  namespace chr = std::chrono;
  auto to_days = [](const CivilDate& d) {
    return chr::sys_days{chr::year_month_day{chr::year{d.year},
                                             chr::month{static_cast<unsigned>(d.month)},
                                             chr::day{static_cast<unsigned>(d.day)}}};
  };
  return (to_days(b) - to_days(a)).count();
}

std::string to_string(Source s) {
  switch (s) {
    case Source::A: return "A";
    case Source::B: return "B";
    case Source::C: return "C";
  }
  return "?";
}

std::optional<Source> source_from_string(const std::string& s) {
  std::string v = to_lower_ascii(trim(s));
  if (v == "a") return Source::A;
  if (v == "b") return Source::B;
  if (v == "c") return Source::C;
  return std::nullopt;
}

std::string to_string(BusinessType t) {
  switch (t) {
    case BusinessType::cafe: return "Cafe";
    case BusinessType::convenience: return "Convenience";
    case BusinessType::gym: return "Gym";
    case BusinessType::institution: return "Institution";
    case BusinessType::liquor: return "Liquor";
    case BusinessType::lodging: return "Lodging";
    case BusinessType::nightlife: return "Nightlife";
    case BusinessType::pharmacy: return "Pharmacy";
    case BusinessType::restaurant: return "Restaurant";
    case BusinessType::retail: return "Retail";
  }
  return "?";
}

std::optional<BusinessType> business_type_from_string(const std::string& s) {
  std::string v = to_lower_ascii(trim(s));
  for (BusinessType t : kAllBusinessTypes) {
    if (to_lower_ascii(to_string(t)) == v) return t;
  }
  return std::nullopt;
}

std::vector<BusinessType> types_in(TypeMask m) {
  std::vector<BusinessType> out;
  for (BusinessType t : kAllBusinessTypes) {
    if (has_type(m, t)) out.push_back(t);
  }
  return out;
}

}  // namespace urb
