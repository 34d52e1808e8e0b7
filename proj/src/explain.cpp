#include "smarte/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace smarte {

Matrix Explanation::log_attention() const { return attention.array().max(kAttentionFloor).log().matrix(); }

Explanation explain(Model& model, const TokenizedSentence& sentence, const SlotAttentionOptions& opts, int iteration,
                    const DecodeOptions& decode_opts) {
  if (iteration < 0 || iteration > opts.iterations) {
    throw ConfigError("explain: iteration must lie in 1.." + std::to_string(opts.iterations));
  }
  Tape tape;
  Forward f = forward(tape, model, sentence, opts, false);
  const AttentionMap& map = f.attention.maps[static_cast<std::size_t>((iteration == 0 ? opts.iterations : iteration) - 1)];
  Explanation e;
  e.tokens = sentence.tokens;
  e.attention = map.weights;
  e.iteration = map.iteration;
  for (const auto& p : slot_predictions(f.heads)) e.slots.push_back(decode(p, sentence.n(), decode_opts));
  return e;
}

std::vector<int> top_tokens(const RowVector& row, int count) {
  std::vector<int> idx(static_cast<std::size_t>(row.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto take = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(count, 0)));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](int a, int b) { return row(a) > row(b) || (row(a) == row(b) && a < b); });
  idx.resize(take);
  return idx;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
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
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Viridis, sampled at five stops.
std::string colour(double t) {
  static const double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(static_cast<int>(t), 3);
  const double f = t - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

std::string span_text(const std::vector<std::string>& tokens, int from, int to) {
  std::string out;
  for (int i = from; i <= to && i < static_cast<int>(tokens.size()); ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

void write_attention_csv(const std::string& path, const Explanation& e) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  for (std::size_t j = 0; j < e.tokens.size(); ++j) os << (j ? "," : "") << csv_field(e.tokens[j]);
  os << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < e.attention.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.attention.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", e.attention(i, j));
      os << (j ? "," : "") << buf;
    }
    os << '\n';
  }
}

Matrix read_attention_csv(const std::string& path, std::vector<std::string>* header) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path + ": missing header", 1);
  const auto head = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != head.size()) throw ParseError(path + ": ragged row", line_no);
    std::vector<double> row;
    for (const auto& f : fields) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw ParseError(path + ": bad number '" + f + "'", line_no);
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(head.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < head.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  if (header) *header = head;
  return m;
}

std::string explanation_json(const Explanation& e, const RelationInventory& relations) {
  using nlohmann::json;
  json slots = json::array();
  for (std::size_t i = 0; i < e.slots.size(); ++i) {
    json s = {{"slot", i}};
    const RowVector row = e.attention.row(static_cast<Eigen::Index>(i));
    s["top_tokens"] = top_tokens(row);
    if (const auto& t = e.slots[i]) {
      s["triple"] = {{"subject", {t->ss, t->se}},
                     {"relation", t->relation},
                     {"relation_name", relations.name(t->relation)},
                     {"object", {t->os, t->oe}},
                     {"score", t->score}};
    } else {
      s["triple"] = nullptr;
    }
    slots.push_back(std::move(s));
  }
  return json{{"iteration", e.iteration}, {"tokens", e.tokens}, {"slots", slots}}.dump(2);
}

std::string render_heatmap_svg(const Explanation& e, const RelationInventory& relations) {
  const int k = static_cast<int>(e.attention.rows()), n = static_cast<int>(e.attention.cols());
  const int cw = 30, ch = 20, left = 70, top = 110, margin = 360;
  const Matrix logs = e.log_attention();
  const double lo = logs.minCoeff(), hi = logs.maxCoeff();
  const double range = hi > lo ? hi - lo : 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + n * cw + margin << "\" height=\""
      << top + k * ch + 40 << "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">log attention, iteration " << e.iteration
      << " (range " << lo << " .. " << hi << ")</text>\n";
  for (int j = 0; j < n; ++j) {
    const int x = left + j * cw + cw / 2;
    svg << "<text x=\"" << x << "\" y=\"" << top - 6 << "\" transform=\"rotate(-60 " << x << ' ' << top - 6
        << ")\">" << xml_escape(e.tokens[static_cast<std::size_t>(j)]) << "</text>\n";
  }
  for (int i = 0; i < k; ++i) {
    const int y = top + i * ch;
    const bool active = i < static_cast<int>(e.slots.size()) && e.slots[static_cast<std::size_t>(i)].has_value();
    svg << "<text x=\"4\" y=\"" << y + ch - 6 << "\"" << (active ? " font-weight=\"bold\" fill=\"#c00000\"" : "")
        << ">slot " << i << "</text>\n";
    for (int j = 0; j < n; ++j) {
      svg << "<rect x=\"" << left + j * cw << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
          << "\" fill=\"" << colour((logs(i, j) - lo) / range) << "\"/>\n";
    }
    if (!active) continue;
    const DecodedTriple& t = *e.slots[static_cast<std::size_t>(i)];
    svg << "<rect class=\"predicting-slot\" x=\"" << left << "\" y=\"" << y << "\" width=\"" << n * cw
        << "\" height=\"" << ch << "\" fill=\"none\" stroke=\"#ff2020\" stroke-width=\"2\"/>\n";
    const RowVector row = e.attention.row(i);
    const auto top5 = top_tokens(row);
    for (std::size_t r = 0; r < top5.size(); ++r) {
      svg << "<text x=\"" << left + top5[r] * cw + cw / 2 << "\" y=\"" << y + ch - 6
          << "\" text-anchor=\"middle\" fill=\"white\" stroke=\"black\" stroke-width=\"0.3\">" << r + 1 << "</text>\n";
    }
    svg << "<text x=\"" << left + n * cw + 8 << "\" y=\"" << y + ch - 6 << "\">("
        << xml_escape(span_text(e.tokens, t.ss, t.se)) << ", " << xml_escape(relations.name(t.relation)) << ", "
        << xml_escape(span_text(e.tokens, t.os, t.oe)) << ")</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void export_explanations(Model& model, std::span<const Example> examples, const std::string& out_dir,
                         const SlotAttentionOptions& opts, int iteration, const DecodeOptions& decode_opts) {
  std::filesystem::create_directories(out_dir);
  char stem[32];
  for (std::size_t s = 0; s < examples.size(); ++s) {
    const Explanation e = explain(model, tokenize(examples[s].words, model.vocab), opts, iteration, decode_opts);
    std::snprintf(stem, sizeof stem, "sentence_%04zu", s);
    const std::string base = (std::filesystem::path(out_dir) / stem).string();
    write_attention_csv(base + ".csv", e);
    std::ofstream js(base + ".json");
    std::ofstream svg(base + ".svg");
    if (!js || !svg) throw IoError("cannot write explanations into " + out_dir);
    js << explanation_json(e, model.relations) << '\n';
    svg << render_heatmap_svg(e, model.relations);
  }
}

}  // namespace smarte
