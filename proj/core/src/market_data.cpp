#include "potfield/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"

namespace potfield {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string row_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

std::vector<PriceRecord> parse_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_csv(in, schema);
}

std::vector<PriceRecord> parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!csv::trim(line).empty()) {
      header = csv::split(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::MissingColumn, "no header row");

  const std::string* names[] = {&schema.timestamp, &schema.open, &schema.high,
                                &schema.low,       &schema.close, &schema.volume};
  std::size_t index[6];
  for (std::size_t k = 0; k < 6; ++k) {
    auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
      return lower(csv::trim(h)) == lower(*names[k]);
    });
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + *names[k] + "' not in header");
    index[k] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t needed = *std::max_element(std::begin(index), std::end(index)) + 1;

  std::vector<PriceRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() < needed) {
      throw Error(ErrorCode::UnparsableRow, row_error(line_no, "too few fields"));
    }
    PriceRecord rec;
    auto ts = parse_timestamp(fields[index[0]]);
    if (!ts) throw Error(ErrorCode::UnparsableRow, row_error(line_no, "bad timestamp"));
    rec.timestamp = *ts;
    double* slots[] = {&rec.open, &rec.high, &rec.low, &rec.close, &rec.volume};
    for (std::size_t k = 0; k < 5; ++k) {
      auto v = csv::parse_double(fields[index[k + 1]]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::UnparsableRow, row_error(line_no, "bad number in '" + *names[k + 1] + "'"));
      }
      *slots[k] = *v;
    }
    if (rec.low <= 0.0 || rec.volume < 0.0 || rec.low > rec.high || rec.open < rec.low ||
        rec.open > rec.high || rec.close < rec.low || rec.close > rec.high) {
      throw Error(ErrorCode::UnparsableRow, row_error(line_no, "OHLCV values violate low <= open,close <= high"));
    }
    if (!records.empty() && rec.timestamp <= records.back().timestamp) {
      throw Error(ErrorCode::NonMonotoneTimestamps, row_error(line_no, "timestamp not after previous row"));
    }
    records.push_back(rec);
  }
  return records;
}

Trajectory Trajectory::slice(Eigen::Index begin, Eigen::Index end) const {
  Trajectory out;
  out.states = states.middleRows(begin, end - begin);
  out.times.assign(times.begin() + begin, times.begin() + end);
  out.dt = dt;
  out.assets = assets;
  out.norm = norm;
  return out;
}

void Trajectory::validate() const {
  if (states.cols() == 0) throw Error(ErrorCode::InvalidArgument, "trajectory has no assets");
  if (static_cast<Eigen::Index>(times.size()) != states.rows()) {
    throw Error(ErrorCode::InvalidArgument, "times and states disagree in length");
  }
  if (static_cast<Eigen::Index>(assets.size()) != states.cols()) {
    throw Error(ErrorCode::InvalidArgument, "asset labels and columns disagree");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!states.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite state entry");
}

std::optional<PriceField> parse_price_field(std::string_view name) {
  const auto n = lower(name);
  if (n == "close") return PriceField::Close;
  if (n == "open") return PriceField::Open;
  if (n == "mean") return PriceField::Mean;
  return std::nullopt;
}

Trajectory build_trajectory(std::span<const AssetSeries> series, PriceField field, UnixSeconds resample) {
  if (series.empty()) throw Error(ErrorCode::InvalidArgument, "no asset series given");
  if (resample <= 0) throw Error(ErrorCode::InvalidArgument, "resample interval must be positive");

  auto ceil_div = [](UnixSeconds a, UnixSeconds b) {
    UnixSeconds q = a / b;
    return (a % b != 0 && a > 0) ? q + 1 : q;
  };
  auto floor_div = [](UnixSeconds a, UnixSeconds b) {
    UnixSeconds q = a / b;
    return (a % b != 0 && a < 0) ? q - 1 : q;
  };

  UnixSeconds first_k = std::numeric_limits<UnixSeconds>::min();
  UnixSeconds last_k = std::numeric_limits<UnixSeconds>::max();
  for (const auto& s : series) {
    if (s.records.empty()) throw Error(ErrorCode::InsufficientOverlap, "asset '" + s.label + "' has no records");
    first_k = std::max(first_k, ceil_div(s.records.front().timestamp, resample));
    last_k = std::min(last_k, floor_div(s.records.back().timestamp, resample));
  }
  if (last_k - first_k + 1 < 3) {
    throw Error(ErrorCode::InsufficientOverlap, "fewer than 3 common resampled timestamps");
  }

  const auto n = static_cast<Eigen::Index>(last_k - first_k + 1);
  const auto m = static_cast<Eigen::Index>(series.size());
  Trajectory traj;
  traj.states.resize(n, m);
  traj.times.resize(static_cast<std::size_t>(n));
  traj.dt = static_cast<double>(resample);
  for (Eigen::Index r = 0; r < n; ++r) {
    traj.times[static_cast<std::size_t>(r)] = static_cast<double>((first_k + r) * resample);
  }

  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& recs = series[static_cast<std::size_t>(c)].records;
    traj.assets.push_back(series[static_cast<std::size_t>(c)].label);
    std::size_t cursor = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const UnixSeconds t = (first_k + r) * resample;
      while (cursor + 1 < recs.size() && recs[cursor + 1].timestamp <= t) ++cursor;
      const auto& rec = recs[cursor];
      double price = rec.close;
      if (field == PriceField::Open) price = rec.open;
      if (field == PriceField::Mean) price = 0.25 * (rec.open + rec.high + rec.low + rec.close);
      traj.states(r, c) = price;
    }
  }
  return traj;
}

Trajectory normalize_minmax(const Trajectory& traj) {
  if (traj.norm) return traj;
  Trajectory out = traj;
  std::vector<MinMax> ranges;
  for (Eigen::Index c = 0; c < traj.dim(); ++c) {
    const double lo = traj.states.col(c).minCoeff();
    const double hi = traj.states.col(c).maxCoeff();
    if (!(hi > lo)) {
      const auto label = c < static_cast<Eigen::Index>(traj.assets.size()) ? traj.assets[static_cast<std::size_t>(c)]
                                                                           : std::to_string(c);
      throw Error(ErrorCode::DegenerateRange, "asset '" + label + "' has a constant price column");
    }
    out.states.col(c) = ((traj.states.col(c).array() - lo) / (hi - lo)).matrix();
    ranges.push_back({lo, hi});
  }
  out.norm = std::move(ranges);
  return out;
}

Trajectory denormalize(const Trajectory& traj) {
  if (!traj.norm) return traj;
  Trajectory out = traj;
  for (Eigen::Index c = 0; c < traj.dim(); ++c) {
    const auto& r = (*traj.norm)[static_cast<std::size_t>(c)];
    out.states.col(c) = (traj.states.col(c).array() * r.span() + r.min).matrix();
  }
  out.norm.reset();
  return out;
}

GradientObservations estimate_gradient_observations(const Trajectory& traj) {
  const Eigen::Index n = traj.size();
  if (n < 3) throw Error(ErrorCode::TooShort, "need at least 3 states for second differences");
  GradientObservations obs;
  obs.X = traj.states.middleRows(1, n - 2);
  const double inv_dt2 = 1.0 / (traj.dt * traj.dt);
  obs.Y = -(traj.states.bottomRows(n - 2) - 2.0 * traj.states.middleRows(1, n - 2) +
            traj.states.topRows(n - 2)) *
          inv_dt2;
  // a tenth of the mean per-column variance; only used to seed optimizer starts
  const Eigen::RowVectorXd mean = obs.Y.colwise().mean();
  const double var = (obs.Y.rowwise() - mean).squaredNorm() / static_cast<double>(obs.Y.size());
  obs.noise_hint = 0.1 * var;
  return obs;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "timestamp";
  for (const auto& a : traj.assets) out << ',' << a;
  out << '\n';
  for (Eigen::Index r = 0; r < traj.size(); ++r) {
    out << csv::format(traj.times[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < traj.dim(); ++c) out << ',' << csv::format(traj.states(r, c));
    out << '\n';
  }
  return out.str();
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  csv::write_file(path, trajectory_to_csv(traj));
}

Trajectory read_trajectory_csv(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MissingColumn, "empty trajectory file '" + path + "'");
  const auto header = csv::split(lines.front());
  if (header.size() < 2) throw Error(ErrorCode::MissingColumn, "trajectory header needs timestamp + assets");

  Trajectory traj;
  for (std::size_t c = 1; c < header.size(); ++c) traj.assets.emplace_back(csv::trim(header[c]));
  const auto m = static_cast<Eigen::Index>(traj.assets.size());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto fields = csv::split(lines[i]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::UnparsableRow, row_error(i + 1, "wrong field count"));
    }
    std::vector<double> row;
    auto t = csv::parse_double(fields[0]);
    if (!t) {
      auto ts = parse_timestamp(fields[0]);
      if (!ts) throw Error(ErrorCode::UnparsableRow, row_error(i + 1, "bad timestamp"));
      t = static_cast<double>(*ts);
    }
    row.push_back(*t);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto v = csv::parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) throw Error(ErrorCode::UnparsableRow, row_error(i + 1, "bad value"));
      row.push_back(*v);
    }
    if (!rows.empty() && row[0] <= rows.back()[0]) {
      throw Error(ErrorCode::NonMonotoneTimestamps, row_error(i + 1, "timestamp not after previous row"));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 3) throw Error(ErrorCode::TooShort, "trajectory file has fewer than 3 rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  traj.states.resize(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    traj.times.push_back(rows[static_cast<std::size_t>(r)][0]);
    for (Eigen::Index c = 0; c < m; ++c) traj.states(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c + 1)];
  }
  traj.dt = (traj.times.back() - traj.times.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    const double step = traj.times[i] - traj.times[i - 1];
    if (std::abs(step - traj.dt) > 1e-6 * traj.dt) {
      throw Error(ErrorCode::NonUniformSampling, "row " + std::to_string(i + 2) + " breaks uniform spacing");
    }
  }
  return traj;
}

}  // namespace potfield
