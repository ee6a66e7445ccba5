#include "tessella/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tessella/errors.hpp"
#include "tessella/topics.hpp"

namespace tess {

namespace {

const char* kPalette[] = {"#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
                          "#eeca3b", "#b279a2", "#ff9da6", "#9d755d", "#bab0ac"};
constexpr int kPaletteSize = 10;

std::string esc(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? std::string("panel") : out;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << body;
    if (!out) throw InputError("short write to " + path);
}

}  // namespace

std::vector<std::vector<double>> heatmap_brightness(const Matrix& weights,
                                                    const std::vector<int>& doc_panel,
                                                    const std::vector<int>& doc_sub,
                                                    const std::vector<PanelInfo>& panels,
                                                    const std::vector<int>& patterns) {
    const int n = weights.rows();
    if (static_cast<int>(doc_panel.size()) != n || static_cast<int>(doc_sub.size()) != n)
        throw ShapeError("heatmap_brightness: doc table size mismatch");

    const std::vector<double> score = pattern_subset_score(weights, patterns);
    double mx = 0.0;
    for (double s : score) mx = std::max(mx, s);

    std::vector<std::vector<double>> cells(panels.size());
    for (std::size_t p = 0; p < panels.size(); ++p)
        cells[p].assign(static_cast<std::size_t>(panels[p].sub_rows) * panels[p].sub_cols, 0.0);

    for (int i = 0; i < n; ++i) {
        const int p = doc_panel[i];
        if (p < 0 || p >= static_cast<int>(panels.size()))
            throw InputError("heatmap_brightness: document references an unknown panel");
        const int cap = panels[p].sub_rows * panels[p].sub_cols;
        if (doc_sub[i] < 0 || doc_sub[i] >= cap)
            throw InputError("heatmap_brightness: sub-image index outside the panel grid");
        cells[p][doc_sub[i]] = mx > 0.0 ? score[i] / mx : 0.0;
    }
    return cells;
}

std::string svg_bar_profile(const std::vector<double>& profile, const std::string& title) {
    const int k = static_cast<int>(profile.size());
    const int w = 640, h = 360, ml = 46, mr = 12, mt = 34, mb = 34;
    const double pw = double(w - ml - mr), ph = double(h - mt - mb);
    double mx = 0.0;
    for (double v : profile) mx = std::max(mx, v);
    if (mx <= 0.0) mx = 1.0;

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    s << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"14\">" << esc(title) << "</text>\n";
    // axes
    s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"#333333\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"#333333\"/>\n";
    s << "<text x=\"12\" y=\"" << mt + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">"
      << num(mx) << "</text>\n";
    s << "<text x=\"12\" y=\"" << h - mb << "\" font-family=\"sans-serif\" font-size=\"10\">0"
      << "</text>\n";

    const double slot = pw / std::max(1, k);
    const double bar = slot * 0.72;
    for (int i = 0; i < k; ++i) {
        const double v = profile[i];
        const double bh = ph * (v / mx);
        const double x = ml + slot * i + (slot - bar) / 2.0;
        const double y = h - mb - bh;
        s << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar)
          << "\" height=\"" << num(bh) << "\" fill=\"#4c78a8\" data-pattern=\"" << i + 1
          << "\" data-weight=\"" << csv_double(v) << "\"/>\n";
        s << "<text x=\"" << num(ml + slot * i + slot / 2.0) << "\" y=\"" << h - mb + 14
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" << i + 1
          << "</text>\n";
    }
    s << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">pattern"
      << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

std::string svg_heatmap(const PanelInfo& panel, const std::vector<double>& brightness,
                        const std::string& title) {
    if (static_cast<int>(brightness.size()) != panel.sub_rows * panel.sub_cols)
        throw ShapeError("svg_heatmap: brightness grid does not match the panel");
    const int cell = 48, mt = 28;
    const int w = std::max(1, panel.sub_cols) * cell;
    const int h = std::max(1, panel.sub_rows) * cell + mt;

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    s << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"13\">" << esc(title) << "</text>\n";
    s << "<rect x=\"0\" y=\"" << mt << "\" width=\"" << w << "\" height=\"" << h - mt
      << "\" fill=\"#000000\"/>\n";
    for (int r = 0; r < panel.sub_rows; ++r) {
        for (int c = 0; c < panel.sub_cols; ++c) {
            const int idx = r * panel.sub_cols + c;
            const double b = brightness[idx];
            s << "<rect x=\"" << c * cell << "\" y=\"" << mt + r * cell << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"#ffffff\" fill-opacity=\""
              << csv_double(b) << "\" data-sub=\"" << idx << "\"/>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

std::string svg_scatter(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<int>& doc_panel, const std::vector<PanelInfo>& panels,
                        const std::string& title) {
    if (x.size() != y.size() || x.size() != doc_panel.size())
        throw ShapeError("svg_scatter: column sizes differ");
    const int plot = 480, ml = 20, mt = 34, legend = 150;
    const int w = ml + plot + legend, h = mt + plot + 20;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!x.empty()) {
        xmin = *std::min_element(x.begin(), x.end());
        xmax = *std::max_element(x.begin(), x.end());
        ymin = *std::min_element(y.begin(), y.end());
        ymax = *std::max_element(y.begin(), y.end());
    }
    // one shared scale keeps the embedding's aspect ratio
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
    const double scale = (plot - 20) / span;
    const double cx = (xmin + xmax) / 2.0, cy = (ymin + ymax) / 2.0;

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    s << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
    s << "<text x=\"" << (ml + plot / 2) << "\" y=\"20\" text-anchor=\"middle\""
      << " font-family=\"sans-serif\" font-size=\"14\">" << esc(title) << "</text>\n";
    s << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot << "\" height=\"" << plot
      << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int p = doc_panel[i];
        if (p < 0 || p >= static_cast<int>(panels.size()))
            throw InputError("svg_scatter: point references an unknown panel");
        const double px = ml + plot / 2.0 + (x[i] - cx) * scale;
        const double py = mt + plot / 2.0 - (y[i] - cy) * scale;
        s << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"4\" fill=\""
          << kPalette[p % kPaletteSize] << "\" fill-opacity=\"0.85\" data-panel=\""
          << esc(panels[p].name) << "\"/>\n";
    }
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const int ly = mt + 10 + static_cast<int>(p) * 18;
        s << "<circle cx=\"" << ml + plot + 16 << "\" cy=\"" << ly << "\" r=\"5\" fill=\""
          << kPalette[p % kPaletteSize] << "\"/>\n";
        s << "<text x=\"" << ml + plot + 26 << "\" y=\"" << ly + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(panels[p].name)
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

ReportFiles write_report(const std::string& dir, const StageHeader& header,
                         const std::vector<PanelInfo>& panels,
                         const std::vector<int>& doc_panel, const std::vector<int>& doc_sub,
                         const Matrix& weights, const std::vector<double>& embed_x,
                         const std::vector<double>& embed_y, const std::vector<int>& patterns) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    ReportFiles out;

    const Matrix profiles =
        aggregate_panels(weights, doc_panel, static_cast<int>(panels.size()));
    const auto cells = heatmap_brightness(weights, doc_panel, doc_sub, panels, patterns);

    std::string subset = "patterns";
    for (std::size_t i = 0; i < patterns.size(); ++i)
        subset += (i == 0 ? " " : ",") + std::to_string(patterns[i]);

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const std::string base = safe_name(panels[p].name);
        std::vector<double> profile(profiles.cols());
        for (int k = 0; k < profiles.cols(); ++k) profile[k] = profiles(static_cast<int>(p), k);

        const std::string csv_path = dir + "/profile_" + base + ".csv";
        {
            std::ostringstream body;
            StageHeader ph = header;
            ph.magic = "tessella-profile";
            write_stage_comments(body, ph);
            body << "pattern,weight\n";
            for (int k = 0; k < profiles.cols(); ++k)
                body << k + 1 << "," << csv_double(profile[k]) << "\n";
            write_text(csv_path, body.str());
        }
        out.paths.push_back(csv_path);

        const std::string bar_path = dir + "/profile_" + base + ".svg";
        write_text(bar_path, svg_bar_profile(profile, "pattern profile: " + panels[p].name));
        out.paths.push_back(bar_path);

        const std::string heat_path = dir + "/heatmap_" + base + ".svg";
        write_text(heat_path,
                   svg_heatmap(panels[p], cells[p], panels[p].name + " (" + subset + ")"));
        out.paths.push_back(heat_path);
    }

    const std::string scatter_path = dir + "/scatter.svg";
    write_text(scatter_path,
               svg_scatter(embed_x, embed_y, doc_panel, panels, "sub-image embedding"));
    out.paths.push_back(scatter_path);
    return out;
}

}  // namespace tess
