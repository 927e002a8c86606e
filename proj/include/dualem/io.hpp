#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <dualem/electrostatic.hpp>
#include <dualem/errors.hpp>
#include <dualem/scenarios.hpp>

namespace dualem {

// Locale-independent numeric text, 12 significant digits. NaN prints as
// "nan" so the column stays machine-parseable everywhere.
inline std::string format_sig(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

// One tabular artifact: provenance comment lines, a fixed header, data rows.
// Rendering is the only place that touches formatting, so a document built
// from identical inputs serializes to identical bytes.
struct CsvDocument {
  std::vector<std::string> provenance;  // emitted as leading "# " lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::string out;
    for (const std::string& p : provenance) {
      out += "# ";
      out += p;
      out += '\n';
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (k) out += ',';
      out += columns[k];
    }
    out += '\n';
    for (const auto& row : rows) {
      if (row.size() != columns.size()) throw IoError("csv: row width does not match header");
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) out += ',';
        out += row[k];
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // binary: keep \n verbatim
  if (!out) throw IoError("io: cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("io: write failed for '" + path + "'");
}

inline CsvDocument scenario_csv(const ScenarioResult& r, const std::string& cfg_hash) {
  CsvDocument doc;
  doc.provenance.push_back("subcommand=scenario " + r.name);
  doc.provenance.push_back("config_hash=" + cfg_hash);
  for (const std::string& note : r.notes) doc.provenance.push_back(note);
  std::set<std::string> flags;
  for (const ScenarioRow& row : r.rows)
    if (!row.flags.empty()) flags.insert(row.flags);
  for (const std::string& f : flags) doc.provenance.push_back("estimates=" + f);
  doc.provenance.push_back("normalization=" + r.normalization);
  doc.columns = {"sweep_value", "mode", "re_V", "im_V", "C_m_F", "V_normalized", "flags"};
  for (const ScenarioRow& row : r.rows)
    doc.rows.push_back({format_sig(row.sweep_value), row.mode, format_sig(row.v.real()),
                        format_sig(row.v.imag()), format_sig(row.c_m),
                        format_sig(row.v_normalized), row.flags});
  return doc;
}

// Symmetric coupling matrix with segment names on both axes; the diagonal
// reports each conductor's total (self) capacitance.
inline CsvDocument matrix_csv(const CapacitanceMatrix& cm, const std::string& cfg_hash) {
  CsvDocument doc;
  doc.provenance.push_back("subcommand=capacitive matrix");
  doc.provenance.push_back("config_hash=" + cfg_hash);
  doc.columns.push_back("segment");
  for (const std::string& n : cm.names) doc.columns.push_back(n);
  const int n = static_cast<int>(cm.names.size());
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row;
    row.push_back(cm.names[static_cast<std::size_t>(i)]);
    for (int j = 0; j < n; ++j)
      row.push_back(format_sig(i == j ? cm.maxwell(i, j) : cm.coupling(i, j)));
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

inline CsvDocument field_csv(const FieldMap& f, const std::vector<double>& value,
                             const std::string& label, const std::string& cfg_hash) {
  if (value.size() != static_cast<std::size_t>(f.nx) * static_cast<std::size_t>(f.ny))
    throw IoError("csv: field size does not match the grid");
  CsvDocument doc;
  doc.provenance.push_back("subcommand=capacitive field " + label);
  doc.provenance.push_back("config_hash=" + cfg_hash);
  doc.columns = {"x", "y", label};
  for (int j = 0; j < f.ny; ++j)
    for (int i = 0; i < f.nx; ++i)
      doc.rows.push_back({format_sig(f.x_of(i)), format_sig(f.y_of(j)),
                          format_sig(value[static_cast<std::size_t>(f.idx(i, j))])});
  return doc;
}

namespace detail {

inline std::string svg_open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_sig(w) + "\" height=\"" +
         format_sig(h) + "\" viewBox=\"0 0 " + format_sig(w) + " " + format_sig(h) + "\">\n";
}

}  // namespace detail

// Minimal line plot: one polyline per series over shared axes, with the data
// range printed in the corner labels. Plots are a convenience view; CSV is
// the authoritative artifact.
struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

inline std::string svg_line_plot(const std::string& title, const std::vector<PlotSeries>& series) {
  const double width = 640, height = 400, margin = 56;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size()) throw IoError("plot: series arity mismatch");
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (first) {
        x_lo = x_hi = s.x[k];
        y_lo = y_hi = s.y[k];
        first = false;
      } else {
        x_lo = std::min(x_lo, s.x[k]);
        x_hi = std::max(x_hi, s.x[k]);
        y_lo = std::min(y_lo, s.y[k]);
        y_hi = std::max(y_hi, s.y[k]);
      }
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };

  static const char* palette[] = {"#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df"};
  std::string svg = detail::svg_open(width, height);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + format_sig(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
  svg += "<rect x=\"" + format_sig(margin) + "\" y=\"" + format_sig(margin) + "\" width=\"" +
         format_sig(width - 2 * margin) + "\" height=\"" + format_sig(height - 2 * margin) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  auto corner = [&](double x, double y, const std::string& t, const char* anchor) {
    svg += "<text x=\"" + format_sig(x) + "\" y=\"" + format_sig(y) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + t + "</text>\n";
  };
  corner(margin, height - margin + 14, format_sig(x_lo), "middle");
  corner(width - margin, height - margin + 14, format_sig(x_hi), "middle");
  corner(margin - 4, height - margin, format_sig(y_lo), "end");
  corner(margin - 4, margin + 4, format_sig(y_hi), "end");

  int color = 0;
  for (const PlotSeries& s : series) {
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      pts += format_sig(px(s.x[k])) + "," + format_sig(py(s.y[k])) + " ";
    }
    const char* c = palette[color % 5];
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + std::string(c) +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + format_sig(width - margin - 4) + "\" y=\"" +
           format_sig(margin + 14 + 14 * color) + "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
           std::string(c) + "\">" + s.label + "</text>\n";
    ++color;
  }
  svg += "</svg>\n";
  return svg;
}

// Heatmap of a scalar field on the solver grid, block-averaged down to a
// bounded rect count so files stay small at any resolution.
inline std::string svg_heatmap(const FieldMap& f, const std::vector<double>& value,
                               const std::string& title) {
  if (value.size() != static_cast<std::size_t>(f.nx) * static_cast<std::size_t>(f.ny))
    throw IoError("plot: field size does not match the grid");
  const int max_cols = 192, max_rows = 96;
  const int bx = (f.nx + max_cols - 1) / max_cols;
  const int by = (f.ny + max_rows - 1) / max_rows;
  const int cols = (f.nx + bx - 1) / bx;
  const int rows = (f.ny + by - 1) / by;

  std::vector<double> cell(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), 0.0);
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (int cj = 0; cj < rows; ++cj)
    for (int ci = 0; ci < cols; ++ci) {
      double sum = 0.0;
      int count = 0;
      for (int j = cj * by; j < std::min((cj + 1) * by, f.ny); ++j)
        for (int i = ci * bx; i < std::min((ci + 1) * bx, f.nx); ++i) {
          const double v = value[static_cast<std::size_t>(f.idx(i, j))];
          if (!std::isfinite(v)) continue;
          sum += v;
          ++count;
        }
      const double mean = count ? sum / count : 0.0;
      cell[static_cast<std::size_t>(cj * cols + ci)] = mean;
      if (first) {
        lo = hi = mean;
        first = false;
      } else {
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
      }
    }
  if (hi <= lo) hi = lo + 1.0;

  const double pix = 5.0, margin = 40.0;
  const double width = margin * 2 + cols * pix, height = margin * 2 + rows * pix + 20;
  std::string svg = detail::svg_open(width, height);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + format_sig(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + title + "</text>\n";
  for (int cj = 0; cj < rows; ++cj)
    for (int ci = 0; ci < cols; ++ci) {
      const double t = (cell[static_cast<std::size_t>(cj * cols + ci)] - lo) / (hi - lo);
      // Blue-to-red ramp through white; y flips so larger y plots upward.
      const int r = static_cast<int>(std::lround(255 * std::min(1.0, 2 * t)));
      const int b = static_cast<int>(std::lround(255 * std::min(1.0, 2 * (1 - t))));
      const int g = std::min(r, b);
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", r, g, b);
      svg += "<rect x=\"" + format_sig(margin + ci * pix) + "\" y=\"" +
             format_sig(margin + 20 + (rows - 1 - cj) * pix) + "\" width=\"" + format_sig(pix) +
             "\" height=\"" + format_sig(pix) + "\" fill=\"" + std::string(color) + "\"/>\n";
    }
  svg += "<text x=\"" + format_sig(margin) + "\" y=\"" + format_sig(height - 8) +
         "\" font-family=\"sans-serif\" font-size=\"10\">min " + format_sig(lo) + "  max " +
         format_sig(hi) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace dualem
