#include "qrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "qrank/error.hpp"
#include "qrank/textio.hpp"

namespace qrank {
namespace {

struct SparseLine {
  int label = 0;
  std::optional<Qid> qid;
  std::vector<std::pair<std::size_t, double>> features;  // (fid, value), fid >= 1
  std::optional<std::string> comment;
  std::size_t line_no = 0;
};

// Returns nullopt for blank and comment-only lines.
std::optional<SparseLine> parse_line(std::string_view raw, std::size_t line_no, bool with_qid) {
  std::string_view body = raw;
  std::optional<std::string> comment;
  if (auto hash = body.find('#'); hash != std::string_view::npos) {
    comment = std::string(textio::trim(body.substr(hash + 1)));
    body = body.substr(0, hash);
  }
  const auto tokens = textio::split_ws(textio::trim(body));
  if (tokens.empty()) {
    return std::nullopt;
  }

  SparseLine out;
  out.line_no = line_no;
  out.comment = std::move(comment);

  auto label = textio::parse_int(tokens[0]);
  if (!label) throw ParseError(line_no, "invalid label '" + std::string(tokens[0]) + "'");
  if (*label < 0) throw ParseError(line_no, "negative label " + std::to_string(*label));
  if (*label > 1'000'000) throw ParseError(line_no, "label out of range");
  out.label = static_cast<int>(*label);

  std::size_t pos = 1;
  if (with_qid) {
    if (tokens.size() < 2 || tokens[1].substr(0, 4) != "qid:")
      throw ParseError(line_no, "missing qid token");
    auto qid = textio::parse_uint(tokens[1].substr(4));
    if (!qid || *qid == 0)
      throw ParseError(line_no, "invalid qid '" + std::string(tokens[1].substr(4)) + "'");
    out.qid = *qid;
    pos = 2;
  }

  std::size_t prev_fid = 0;
  for (; pos < tokens.size(); ++pos) {
    const auto tok = tokens[pos];
    if (tok.substr(0, 4) == "qid:") {
      throw ParseError(line_no, with_qid ? "duplicate qid token"
                                         : "unexpected qid token in flat format");
    }
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw ParseError(line_no, "malformed feature token '" + std::string(tok) + "'");
    auto fid = textio::parse_uint(tok.substr(0, colon));
    if (!fid || *fid == 0)
      throw ParseError(line_no, "invalid feature id in '" + std::string(tok) + "'");
    auto value = textio::parse_real(tok.substr(colon + 1));
    if (!value || !std::isfinite(*value))
      throw ParseError(line_no, "invalid feature value in '" + std::string(tok) + "'");
    if (*fid <= prev_fid)
      throw ParseError(line_no, "feature ids not strictly ascending at '" + std::string(tok) + "'");
    prev_fid = *fid;
    out.features.emplace_back(static_cast<std::size_t>(*fid), *value);
  }
  return out;
}

std::vector<SparseLine> parse_lines(std::string_view text, bool with_qid) {
  std::vector<SparseLine> lines;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto parsed = parse_line(line, line_no, with_qid)) lines.push_back(std::move(*parsed));
    start = end + 1;
  }
  if (lines.empty()) throw DataError("empty dataset");
  return lines;
}

std::size_t max_fid(const std::vector<SparseLine>& lines) {
  std::size_t dim = 0;
  for (const auto& l : lines)
    if (!l.features.empty()) dim = std::max(dim, l.features.back().first);
  return dim;
}

std::vector<double> densify(const SparseLine& l, std::size_t dim) {
  std::vector<double> x(dim, 0.0);
  for (auto [fid, v] : l.features) x[fid - 1] = v;
  return x;
}

// Zero features are omitted except the last one, which keeps `dim` recoverable.
void append_features(std::string& out, std::span<const double> x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] == 0.0 && j + 1 != x.size()) continue;
    out += ' ';
    out += std::to_string(j + 1);
    out += ':';
    out += textio::format_real(x[j]);
  }
}

void append_comment(std::string& out, const std::optional<std::string>& comment) {
  if (!comment) return;
  out += comment->empty() ? " #" : " # " + *comment;
}

}  // namespace

std::size_t Dataset::num_candidates() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

int Dataset::max_label() const {
  int m = 0;
  for (const auto& g : groups)
    for (const auto& c : g.candidates) m = std::max(m, c.label);
  return m;
}

void validate(const Dataset& ds) {
  if (ds.groups.empty()) throw DataError("empty dataset");
  std::unordered_set<Qid> seen;
  for (const auto& g : ds.groups) {
    if (g.candidates.empty())
      throw DataError("query " + std::to_string(g.qid) + " has no candidates");
    if (!seen.insert(g.qid).second)
      throw DataError("duplicate query id " + std::to_string(g.qid));
    for (const auto& c : g.candidates) {
      if (c.qid != g.qid) throw DataError("candidate qid does not match its group");
      if (c.label < 0) throw DataError("negative label in query " + std::to_string(g.qid));
      if (c.features.size() != ds.dim)
        throw DataError("feature dimension mismatch in query " + std::to_string(g.qid));
      for (double v : c.features)
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
  }
}

Dataset parse_ranking_text(std::string_view text) {
  const auto lines = parse_lines(text, true);
  Dataset ds;
  ds.dim = max_fid(lines);
  std::unordered_set<Qid> closed;
  for (const auto& l : lines) {
    const Qid qid = *l.qid;
    if (ds.groups.empty() || ds.groups.back().qid != qid) {
      if (closed.count(qid) != 0) {
        throw ParseError(l.line_no, "qid " + std::to_string(qid) +
                                        " reappears after other queries (input must be grouped by qid)");
      }
      if (!ds.groups.empty()) closed.insert(ds.groups.back().qid);
      ds.groups.push_back(QueryGroup{qid, {}});
    }
    ds.groups.back().candidates.push_back(Candidate{l.label, qid, densify(l, ds.dim), l.comment});
  }
  return ds;
}

Dataset parse_ranking_file(const std::string& path) {
  return parse_ranking_text(textio::read_file(path));
}

std::string format_ranking_text(const Dataset& ds) {
  validate(ds);
  std::string out;
  for (const auto& g : ds.groups) {
    for (const auto& c : g.candidates) {
      out += std::to_string(c.label);
      out += " qid:";
      out += std::to_string(c.qid);
      append_features(out, c.features);
      append_comment(out, c.comment);
      out += '\n';
    }
  }
  return out;
}

void write_ranking_file(const Dataset& ds, const std::string& path) {
  textio::write_file(path, format_ranking_text(ds));
}

std::vector<FlatRecord> parse_flat_text(std::string_view text) {
  const auto lines = parse_lines(text, false);
  const std::size_t dim = max_fid(lines);
  std::vector<FlatRecord> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(FlatRecord{l.label, densify(l, dim), l.comment});
  return out;
}

std::vector<FlatRecord> parse_flat_file(const std::string& path) {
  return parse_flat_text(textio::read_file(path));
}

std::string format_flat_text(std::span<const FlatRecord> records) {
  if (records.empty()) throw DataError("empty dataset");
  std::string out;
  for (const auto& r : records) {
    out += std::to_string(r.label);
    append_features(out, r.features);
    append_comment(out, r.comment);
    out += '\n';
  }
  return out;
}

Dataset attach_query_ids(std::span<const FlatRecord> records, std::size_t group_size) {
  if (group_size == 0) throw ConfigError("group size must be positive");
  if (records.empty()) throw DataError("empty dataset");
  if (records.size() % group_size != 0) {
    throw DataError(std::to_string(records.size()) + " records are not divisible into groups of " +
                    std::to_string(group_size));
  }
  Dataset ds;
  for (const auto& r : records) ds.dim = std::max(ds.dim, r.features.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Qid qid = 1 + i / group_size;
    if (i % group_size == 0) ds.groups.push_back(QueryGroup{qid, {}});
    Candidate c{records[i].label, qid, records[i].features, records[i].comment};
    c.features.resize(ds.dim, 0.0);
    ds.groups.back().candidates.push_back(std::move(c));
  }
  return ds;
}

std::vector<FlatRecord> flatten(const Dataset& ds) {
  std::vector<FlatRecord> out;
  out.reserve(ds.num_candidates());
  for (const auto& g : ds.groups)
    for (const auto& c : g.candidates) out.push_back(FlatRecord{c.label, c.features, c.comment});
  return out;
}

std::pair<Dataset, Dataset> split_tail(const Dataset& ds, std::size_t n_tail) {
  const std::size_t q = ds.groups.size();
  if (n_tail == 0) throw ConfigError("tail size must be positive");
  if (n_tail >= q) {
    throw DataError("cannot split " + std::to_string(n_tail) + " tail queries from a dataset of " +
                    std::to_string(q) + " queries");
  }
  Dataset head{{ds.groups.begin(), ds.groups.end() - static_cast<std::ptrdiff_t>(n_tail)}, ds.dim};
  Dataset tail{{ds.groups.end() - static_cast<std::ptrdiff_t>(n_tail), ds.groups.end()}, ds.dim};
  return {std::move(head), std::move(tail)};
}

Standardizer Standardizer::fit(const Dataset& ds) {
  Standardizer s;
  s.mean.assign(ds.dim, 0.0);
  s.scale.assign(ds.dim, 1.0);
  const double n = static_cast<double>(ds.num_candidates());
  if (n == 0) return s;
  for (const auto& g : ds.groups)
    for (const auto& c : g.candidates)
      for (std::size_t j = 0; j < ds.dim; ++j) s.mean[j] += c.features[j];
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(ds.dim, 0.0);
  for (const auto& g : ds.groups)
    for (const auto& c : g.candidates)
      for (std::size_t j = 0; j < ds.dim; ++j) {
        const double d = c.features[j] - s.mean[j];
        var[j] += d * d;
      }
  for (std::size_t j = 0; j < ds.dim; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw DataError("standardizer dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * scale[j];
  return out;
}

Dataset Standardizer::apply(const Dataset& ds) const {
  Dataset out = ds;
  for (auto& g : out.groups)
    for (auto& c : g.candidates) c.features = apply(c.features);
  return out;
}

}  // namespace qrank
