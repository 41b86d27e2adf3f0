#include "qkiter/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "qkiter/error.h"

namespace qkiter {

GroundTruth::GroundTruth(std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs)
    : pairs_(pairs.begin(), pairs.end()) {}

void GroundTruth::add(std::uint64_t query_id, std::uint64_t key_id) {
  pairs_.emplace(query_id, key_id);
}

bool GroundTruth::contains(std::uint64_t query_id, std::uint64_t key_id) const {
  return pairs_.count({query_id, key_id}) != 0;
}

void write_ground_truth_csv(const std::filesystem::path& path, const GroundTruth& gt) {
  std::ofstream out(path, std::ios::trunc);
  require(out.is_open(), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << "query_id,key_id\n";
  for (const auto& [q, k] : gt.pairs()) out << q << ',' << k << '\n';
  require(out.good(), ErrorKind::kIo, "failed writing " + path.string());
}

namespace {

std::uint64_t parse_id(std::string_view text, const std::filesystem::path& path,
                       std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && ptr == text.data() + text.size() && !text.empty(),
          ErrorKind::kFormat,
          path.string() + ":" + std::to_string(line) + ": invalid id \"" + std::string(text) +
              "\"");
  return value;
}

}  // namespace

GroundTruth read_ground_truth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.is_open(), ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kFormat,
          path.string() + ": empty ground-truth file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "query_id,key_id", ErrorKind::kFormat,
          path.string() + ": expected header \"query_id,key_id\"");
  GroundTruth gt;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::kFormat,
            path.string() + ":" + std::to_string(number) + ": expected two columns");
    const std::string_view view(line);
    gt.add(parse_id(view.substr(0, comma), path, number),
           parse_id(view.substr(comma + 1), path, number));
  }
  return gt;
}

RankedPairList rank_all_pairs(MatrixView queries, std::span<const std::uint64_t> query_ids,
                              MatrixView keys, std::span<const std::uint64_t> key_ids,
                              double tau, const GroundTruth& gt) {
  require(queries.rows() > 0 && keys.rows() > 0, ErrorKind::kDegenerateInput,
          "ranking needs at least one query and one key");
  require(queries.cols() == keys.cols(), ErrorKind::kInputShape,
          "query and key descriptors differ in length");
  require(query_ids.size() == queries.rows() && key_ids.size() == keys.rows(),
          ErrorKind::kInputShape, "id lists do not match descriptor counts");
  require(tau > 0.0, ErrorKind::kValidation, "tau must be > 0");

  struct Scored {
    double sq_distance;
    std::uint64_t query_id;
    std::uint64_t key_id;
  };
  std::vector<Scored> scored;
  scored.reserve(queries.rows() * keys.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    for (std::size_t j = 0; j < keys.rows(); ++j) {
      scored.push_back({squared_distance(queries.row(i), keys.row(j)), query_ids[i], key_ids[j]});
    }
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.sq_distance != b.sq_distance) return a.sq_distance < b.sq_distance;
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    return a.key_id < b.key_id;
  });

  RankedPairList ranking;
  ranking.n_positives = gt.size();
  ranking.entries.reserve(scored.size());
  for (const Scored& s : scored) {
    ranking.entries.push_back({s.query_id, s.key_id, std::exp(-s.sq_distance / tau),
                               gt.contains(s.query_id, s.key_id)});
  }
  return ranking;
}

RankedPairList rank_scored_pairs(std::vector<RankedPair> pairs, const GroundTruth& gt) {
  for (const RankedPair& p : pairs) {
    require(std::isfinite(p.score), ErrorKind::kNumeric, "non-finite pair score");
  }
  std::sort(pairs.begin(), pairs.end(), [](const RankedPair& a, const RankedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    return a.key_id < b.key_id;
  });
  for (RankedPair& p : pairs) p.positive = gt.contains(p.query_id, p.key_id);
  return {std::move(pairs), gt.size()};
}

double micro_ap(const RankedPairList& ranking) {
  require(ranking.n_positives >= 1, ErrorKind::kUndefinedMetric,
          "micro AP needs at least one ground-truth positive");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
    if (!ranking.entries[r].positive) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(ranking.n_positives);
}

double macro_ap(const RankedPairList& ranking) {
  struct QueryStats {
    std::size_t seen = 0;
    std::size_t hits = 0;
    double sum = 0.0;
  };
  std::map<std::uint64_t, QueryStats> per_query;
  for (const RankedPair& p : ranking.entries) {
    QueryStats& s = per_query[p.query_id];
    ++s.seen;
    if (p.positive) {
      ++s.hits;
      s.sum += static_cast<double>(s.hits) / static_cast<double>(s.seen);
    }
  }
  // Per-query denominators are the positives present in the list, which is
  // all of them for a complete ranking from rank_all_pairs.
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& [query, s] : per_query) {
    if (s.hits == 0) continue;
    total += s.sum / static_cast<double>(s.hits);
    ++counted;
  }
  require(counted >= 1, ErrorKind::kUndefinedMetric,
          "macro AP needs at least one query with a positive");
  return total / static_cast<double>(counted);
}

std::vector<PrPoint> pr_curve(const RankedPairList& ranking) {
  require(ranking.n_positives >= 1, ErrorKind::kUndefinedMetric,
          "PR curve needs at least one ground-truth positive");
  std::vector<PrPoint> curve;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
    if (!ranking.entries[r].positive) continue;
    ++hits;
    curve.push_back({static_cast<double>(hits) / static_cast<double>(r + 1),
                     static_cast<double>(hits) / static_cast<double>(ranking.n_positives)});
  }
  return curve;
}

void write_pr_curve_csv(const std::filesystem::path& path, std::span<const PrPoint> curve) {
  std::ofstream out(path, std::ios::trunc);
  require(out.is_open(), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "precision,recall\n";
  for (const PrPoint& p : curve) out << p.precision << ',' << p.recall << '\n';
}

}  // namespace qkiter
