#include "covpred/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "covpred/error.hpp"
#include "covpred/geo.hpp"

namespace covpred::data {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int parse_channels(std::string_view label) {
  int n = 0;
  const auto res = std::from_chars(label.data(), label.data() + label.size(), n);
  if (res.ec != std::errc() || res.ptr == label.data())
    throw InvalidInput("channel label '" + std::string(label) + "' has no leading count");
  const std::string_view rest(res.ptr, label.data() + label.size() - res.ptr);
  if (!rest.empty() && rest.front() != 'T' && rest.front() != 't')
    throw InvalidInput("channel label '" + std::string(label) + "' is not of the form 32T32R");
  if (n <= 0) throw InvalidInput("channel count must be positive");
  return n;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Splits one CSV line. Double-quoted fields may contain commas and "".
std::vector<std::string> split_csv(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(row, "unterminated quoted field");
  fields.emplace_back(trim(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

double parse_number(const std::string& text, std::size_t row, std::string_view column) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ParseError(row, "column " + std::string(column) + ": '" + text + "' is not a finite number");
  return v;
}

/// Yields (row number, fields) for every nonblank line after the header.
template <typename Fn>
void for_each_row(std::istream& in, std::vector<std::string>& header, Fn&& fn) {
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (row == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> fields = split_csv(line, row);
    if (!have_header) {
      header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()));
    fn(row, fields);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<BsRecord> parse_bs_table(std::istream& in, const SigmaTable& sigma_table) {
  std::vector<std::string> header;
  std::map<std::string_view, std::size_t> col;
  std::vector<BsRecord> out;
  std::unordered_set<std::string> seen;
  bool checked = false;
  for_each_row(in, header, [&](std::size_t row, const std::vector<std::string>& f) {
    if (!checked) {
      for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
      for (std::string_view name : kBsColumns)
        if (name != "sigma" && !col.count(name))
          throw ParseError(1, "missing column " + std::string(name));
      checked = true;
    }
    auto text = [&](std::string_view name) -> const std::string& { return f[col.at(name)]; };
    auto num = [&](std::string_view name) { return parse_number(text(name), row, name); };
    BsRecord r;
    r.bs_id = text("bs_id");
    if (r.bs_id.empty()) throw ParseError(row, "empty bs_id");
    r.location = {num("longitude"), num("latitude"), num("antenna_height_m")};
    r.beam_static.aau_type = text("aau_type");
    try {
      r.beam_static.num_channels = parse_channels(text("num_channels"));
    } catch (const InvalidInput& e) {
      throw ParseError(row, e.what());
    }
    r.beam_static.coverage_scenario = text("coverage_scenario");
    r.beam_static.carrier_frequency = num("carrier_frequency_mhz");
    r.orientation = {num("horizontal_azimuth_deg"), num("beam_azimuth_deg"), num("mech_tilt_deg"),
                     num("digital_tilt_deg")};
    r.power.total_tx_power = num("total_tx_power_dbm");
    r.power.bandwidth = num("bandwidth");
    const auto sc = col.find("sigma");
    r.power.ssb_utilization_sigma =
        sc != col.end() && !f[sc->second].empty()
            ? parse_number(f[sc->second], row, "sigma")
            : sigma_table.lookup(r.beam_static.carrier_frequency, r.power.bandwidth);
    try {
      geo::validate(r.location);
      if (!(r.beam_static.carrier_frequency > 0.0))
        throw InvalidInput("carrier frequency must be positive");
      geo::ssb_tx_power(r.power);
    } catch (const InvalidInput& e) {
      throw ParseError(row, e.what());
    }
    if (!seen.insert(r.bs_id).second) throw IntegrityError("duplicate bs_id " + r.bs_id);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<BsRecord> read_bs_table(const std::filesystem::path& path,
                                    const SigmaTable& sigma_table) {
  std::ifstream in = open_in(path);
  return parse_bs_table(in, sigma_table);
}

void write_bs_table(std::ostream& out, std::span<const BsRecord> stations) {
  bool first = true;
  for (std::string_view name : kBsColumns) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  out << '\n';
  const auto d = format_double;
  for (const BsRecord& r : stations) {
    out << csv_field(r.bs_id) << ',' << d(r.location.longitude) << ',' << d(r.location.latitude)
        << ',' << d(r.location.antenna_height) << ',' << csv_field(r.beam_static.aau_type) << ','
        << r.beam_static.num_channels << ',' << csv_field(r.beam_static.coverage_scenario) << ','
        << d(r.beam_static.carrier_frequency) << ',' << d(r.orientation.horizontal_azimuth) << ','
        << d(r.orientation.beam_azimuth) << ',' << d(r.orientation.mechanical_down_tilt) << ','
        << d(r.orientation.digital_down_tilt) << ',' << d(r.power.total_tx_power) << ','
        << d(r.power.bandwidth) << ',' << d(r.power.ssb_utilization_sigma) << '\n';
  }
  if (!out) throw IoError("failed to write BS table");
}

void save_bs_table(const std::filesystem::path& path, std::span<const BsRecord> stations) {
  std::ofstream out = open_out(path);
  write_bs_table(out, stations);
}

MeasurementTable parse_measurements(std::istream& in, int m_beams) {
  std::vector<std::string> header;
  MeasurementTable table;
  bool checked = false;
  for_each_row(in, header, [&](std::size_t row, const std::vector<std::string>& f) {
    if (!checked) {
      const int in_header = static_cast<int>(header.size()) - 5;
      if (in_header < 1) throw ParseError(1, "measurement header needs at least one beam column");
      table.m_beams = m_beams > 0 ? m_beams : in_header;
      if (in_header != table.m_beams)
        throw ParseError(1, "header has " + std::to_string(in_header) + " beam columns, expected " +
                                std::to_string(table.m_beams));
      std::vector<std::string> want = {"bs_id", "longitude", "latitude", "altitude_m", "ss_rsrp_dbm"};
      for (int m = 1; m <= table.m_beams; ++m) want.push_back("ssb" + std::to_string(m) + "_rsrp_dbm");
      for (std::size_t i = 0; i < want.size(); ++i)
        if (header[i] != want[i])
          throw ParseError(1, "column " + std::to_string(i + 1) + " should be " + want[i] +
                                  ", found " + header[i]);
      checked = true;
    }
    MeasurementSample s;
    s.bs_id = f[0];
    if (s.bs_id.empty()) throw ParseError(row, "empty bs_id");
    s.point = {parse_number(f[1], row, "longitude"), parse_number(f[2], row, "latitude"),
               parse_number(f[3], row, "altitude_m")};
    try {
      geo::validate(s.point);
    } catch (const InvalidInput& e) {
      throw ParseError(row, e.what());
    }
    const std::size_t outputs = static_cast<std::size_t>(table.m_beams) + 1;
    s.rsrp.assign(outputs, 0.0);
    s.observed.assign(outputs, false);
    for (std::size_t j = 0; j < outputs; ++j) {
      const std::string& cell = f[4 + j];
      if (cell.empty()) continue;
      s.rsrp[j] = parse_number(cell, row, header[4 + j]);
      s.observed[j] = true;
    }
    if (std::none_of(s.observed.begin(), s.observed.end(), [](bool b) { return b; }))
      throw ParseError(row, "no observed RSRP values");
    if (s.observed[0]) {
      double best = -INFINITY;
      for (std::size_t j = 1; j < outputs; ++j)
        if (s.observed[j]) best = std::max(best, s.rsrp[j]);
      if (s.rsrp[0] < best) {
        ++table.inconsistent_rows;
        spdlog::warn("measurement row {}: SS-RSRP {} is below the strongest beam {}", row, s.rsrp[0], best);
      }
    }
    table.samples.push_back(std::move(s));
  });
  if (!checked) table.m_beams = std::max(m_beams, 0);
  return table;
}

MeasurementTable read_measurements(const std::filesystem::path& path, int m_beams) {
  std::ifstream in = open_in(path);
  return parse_measurements(in, m_beams);
}

void write_measurements(std::ostream& out, std::span<const MeasurementSample> samples, int m_beams) {
  if (m_beams < 1) throw InvalidInput("m_beams must be at least 1");
  out << "bs_id,longitude,latitude,altitude_m,ss_rsrp_dbm";
  for (int m = 1; m <= m_beams; ++m) out << ",ssb" << m << "_rsrp_dbm";
  out << '\n';
  const std::size_t outputs = static_cast<std::size_t>(m_beams) + 1;
  for (const MeasurementSample& s : samples) {
    if (s.rsrp.size() != outputs || s.observed.size() != outputs)
      throw ShapeError("sample for " + s.bs_id + " has the wrong beam count");
    out << csv_field(s.bs_id) << ',' << format_double(s.point.longitude) << ','
        << format_double(s.point.latitude) << ',' << format_double(s.point.altitude);
    for (std::size_t j = 0; j < outputs; ++j) {
      out << ',';
      if (s.observed[j]) out << format_double(s.rsrp[j]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed to write measurement table");
}

void save_measurements(const std::filesystem::path& path,
                       std::span<const MeasurementSample> samples, int m_beams) {
  std::ofstream out = open_out(path);
  write_measurements(out, samples, m_beams);
}

JoinResult join(const std::vector<BsRecord>& stations,
                const std::vector<MeasurementSample>& samples) {
  std::unordered_map<std::string, const BsRecord*> by_id;
  for (const BsRecord& r : stations) by_id.emplace(r.bs_id, &r);
  JoinResult res;
  res.rows.reserve(samples.size());
  for (const MeasurementSample& s : samples) {
    const auto it = by_id.find(s.bs_id);
    if (it == by_id.end()) {
      ++res.dropped;
      continue;
    }
    res.rows.push_back({it->second, &s});
  }
  if (res.dropped > 0) spdlog::warn("dropped {} samples with no matching BS record", res.dropped);
  return res;
}

void SplitSpec::validate() const {
  if (!(sampling_rate > 0.0 && sampling_rate < 0.9))
    throw InvalidSplit("sampling rate must lie in (0, 0.9)");
  if (!(val_fraction > 0.0) || sampling_rate + val_fraction > 1.0 + 1e-12)
    throw InvalidSplit("sampling rate plus validation fraction exceeds 1");
}

namespace {

// Round half up; the epsilon absorbs products such as 0.7 * 10 landing at
// 6.999999999999999.
std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9)); }

}  // namespace

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw InvalidSplit("splitting needs at least 3 stations");
  SplitSizes s;
  s.train = round_half_up(spec.sampling_rate * static_cast<double>(n));
  s.val = std::max<std::size_t>(1, round_half_up(spec.val_fraction * static_cast<double>(n)));
  if (s.train == 0) throw InvalidSplit("sampling rate leaves no training stations");
  if (s.train + s.val >= n) throw InvalidSplit("split leaves no test stations");
  s.test = n - s.train - s.val;
  return s;
}

Split split_by_bs(std::span<const BsRecord> stations, const SplitSpec& spec) {
  const SplitSizes sz = split_sizes(stations.size(), spec);
  std::vector<std::string> ids;
  ids.reserve(stations.size());
  for (const BsRecord& r : stations) ids.push_back(r.bs_id);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  Split out;
  out.train.assign(ids.begin(), ids.begin() + sz.train);
  out.val.assign(ids.begin() + sz.train, ids.begin() + sz.train + sz.val);
  out.test.assign(ids.begin() + sz.train + sz.val, ids.end());
  return out;
}

SplitRows partition(std::span<const Observation> rows, const Split& split) {
  std::unordered_map<std::string_view, int> where;
  for (const auto& id : split.train) where.emplace(id, 0);
  for (const auto& id : split.val) where.emplace(id, 1);
  for (const auto& id : split.test) where.emplace(id, 2);
  SplitRows out;
  for (const Observation& o : rows) {
    const auto it = where.find(o.bs->bs_id);
    if (it == where.end()) continue;
    (it->second == 0 ? out.train : it->second == 1 ? out.val : out.test).push_back(o);
  }
  return out;
}

}  // namespace covpred::data
