// Copyright 2026 The chordrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include "chordrec/analysis.hpp"

#include "chordrec/auditory_model.hpp"
#include "chordrec/chords.hpp"
#include "chordrec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace chordrec {

namespace {

void check_weights(const Eigen::MatrixXd& w) {
    if (w.rows() != ChordLabel::kNumClasses || w.cols() == 0)
        throw DataError("classifier weights must be 25 x D, got " + std::to_string(w.rows()) + " x " +
                        std::to_string(w.cols()));
    if (!w.allFinite()) throw DataError("classifier weights are not finite");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> class_names(const std::vector<int>& order) {
    std::vector<std::string> out;
    for (int k : order) out.push_back(ChordLabel(k).name());
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

// Blue (-1) to white (0) to red (+1); grey for NaN.
std::string diverging_color(double v) {
    if (std::isnan(v)) return "#999999";
    v = std::clamp(v, -1.0, 1.0);
    const auto mix = [](double t) { return static_cast<int>(std::lround(255.0 * (1.0 - t))); };
    char buf[8];
    if (v >= 0) std::snprintf(buf, sizeof buf, "#ff%02x%02x", mix(v), mix(v));
    else std::snprintf(buf, sizeof buf, "#%02x%02xff", mix(-v), mix(-v));
    return buf;
}

void write_heatmap_svg(const std::filesystem::path& path, const LabeledMatrix& m, const std::string& title) {
    const int cell = 18, left = 60, top = 40;
    const auto rows = static_cast<int>(m.values.rows()), cols = static_cast<int>(m.values.cols());
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + cols * cell + 20 << "\" height=\""
      << top + rows * cell + 60 << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
    f << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
    for (int i = 0; i < rows; ++i) {
        f << "<text x=\"" << left - 4 << "\" y=\"" << top + i * cell + 12 << "\" text-anchor=\"end\">"
          << xml_escape(m.row_labels[static_cast<std::size_t>(i)]) << "</text>\n";
        for (int j = 0; j < cols; ++j)
            f << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"" << diverging_color(m.values(i, j)) << "\"/>\n";
    }
    for (int j = 0; j < cols; ++j) {
        const int x = left + j * cell + 12, y = top + rows * cell + 6;
        f << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(90 " << x << ' ' << y << ")\">"
          << xml_escape(m.column_labels[static_cast<std::size_t>(j)]) << "</text>\n";
    }
    f << "</svg>\n";
}

void write_traces_svg(const std::filesystem::path& path, const std::vector<const LabeledMatrix*>& panels,
                      const std::string& title) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    const int width = 720, panel_h = 160, left = 50, top = 30;
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    const int height = top + static_cast<int>(panels.size()) * (panel_h + 30);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    f << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const LabeledMatrix& m = *panels[p];
        const int y0 = top + static_cast<int>(p) * (panel_h + 30);
        double lo = m.values.minCoeff(), hi = m.values.maxCoeff();
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double plot_w = width - left - 20;
        const auto cols = m.values.cols();
        const auto xs = [&](Eigen::Index j) { return left + plot_w * static_cast<double>(j) / std::max<double>(1, cols - 1); };
        const auto ys = [&](double v) { return y0 + panel_h * (hi - v) / (hi - lo); };
        f << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\"" << panel_h
          << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        if (lo < 0 && hi > 0)
            f << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << ys(0) << "\" y2=\"" << ys(0)
              << "\" stroke=\"#888\" stroke-dasharray=\"2,2\"/>\n";
        for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
            f << "<polyline fill=\"none\" stroke=\"" << colors[static_cast<std::size_t>(i) % 6] << "\" points=\"";
            for (Eigen::Index j = 0; j < cols; ++j) f << xs(j) << ',' << ys(m.values(i, j)) << ' ';
            f << "\"/>\n";
            f << "<text x=\"" << left + 4 + 70 * i << "\" y=\"" << y0 + panel_h + 14 << "\" fill=\""
              << colors[static_cast<std::size_t>(i) % 6] << "\">" << xml_escape(m.row_labels[static_cast<std::size_t>(i)])
              << "</text>\n";
        }
    }
    f << "</svg>\n";
}

}  // namespace

std::vector<int> circle_of_fifths_order() {
    std::vector<int> order;
    for (int i = 0; i < 12; ++i) order.push_back(ChordLabel::major((7 * i) % 12).index());
    for (int i = 0; i < 12; ++i) order.push_back(ChordLabel::minor((7 * i + 9) % 12).index());
    order.push_back(ChordLabel::kNoChordIndex);
    return order;
}

CorrelationMatrix weight_correlation(const Eigen::MatrixXd& gap_weights, const std::vector<int>& order) {
    check_weights(gap_weights);
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> all(ChordLabel::kNumClasses);
    std::iota(all.begin(), all.end(), 0);
    if (sorted != all) throw DataError("class order must be a permutation of the 25 classes");

    const Eigen::Index k = gap_weights.rows();
    Eigen::MatrixXd centered = gap_weights.colwise() - gap_weights.rowwise().mean();
    Eigen::VectorXd norms = centered.rowwise().norm();
    CorrelationMatrix out;
    out.order = order;
    // A constant row can leave rounding residue after centring.
    const double tol = 1e-12 * std::sqrt(static_cast<double>(gap_weights.cols()));
    for (Eigen::Index i = 0; i < k; ++i) {
        if (norms(i) <= tol * (1.0 + gap_weights.row(i).cwiseAbs().maxCoeff())) {
            out.undefined.push_back(static_cast<int>(i));
            norms(i) = 0.0;
        }
    }

    out.values.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            const int i = order[static_cast<std::size_t>(a)], j = order[static_cast<std::size_t>(b)];
            if (norms(i) == 0.0 || norms(j) == 0.0) out.values(a, b) = std::numeric_limits<double>::quiet_NaN();
            else if (i == j) out.values(a, b) = 1.0;
            else
                out.values(a, b) =
                    std::clamp(centered.row(i).dot(centered.row(j)) / (norms(i) * norms(j)), -1.0, 1.0);
        }
    }
    // The dot product is symmetric in exact arithmetic only; copy one triangle.
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < a; ++b) out.values(a, b) = out.values(b, a);
    return out;
}

std::vector<int> top_feature_maps(const Eigen::MatrixXd& gap_weights, ChordQuality quality, std::size_t k) {
    check_weights(gap_weights);
    const auto maps = static_cast<std::size_t>(gap_weights.cols());
    if (k > maps) throw UsageError("k exceeds the number of feature maps");
    const Eigen::Index first = quality == ChordQuality::Major ? 0 : 12;
    const Eigen::VectorXd mean = gap_weights.middleRows(first, 12).colwise().mean().transpose();
    std::vector<int> idx(maps);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return mean(a) > mean(b); });
    idx.resize(k);
    return idx;
}

std::array<int, 6> chords_containing(int p) {
    p = ((p % 12) + 12) % 12;
    const auto r = [p](int d) { return (p - d + 12) % 12; };
    return {ChordLabel::major(r(0)).index(), ChordLabel::major(r(4)).index(), ChordLabel::major(r(7)).index(),
            ChordLabel::minor(r(0)).index(), ChordLabel::minor(r(3)).index(), ChordLabel::minor(r(7)).index()};
}

Eigen::MatrixXd pitch_class_profiles(const Eigen::MatrixXd& gap_weights) {
    check_weights(gap_weights);
    Eigen::MatrixXd out = Eigen::MatrixXd::Ones(12, gap_weights.cols());
    for (int p = 0; p < 12; ++p)
        for (int c : chords_containing(p)) out.row(p) = out.row(p).cwiseProduct(gap_weights.row(c));
    return out;
}

void write_csv(const std::filesystem::path& path, const LabeledMatrix& m) {
    if (m.row_labels.size() != static_cast<std::size_t>(m.values.rows()) ||
        m.column_labels.size() != static_cast<std::size_t>(m.values.cols()))
        throw UsageError("CSV labels do not match the matrix shape");
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    f << "label";
    for (const auto& c : m.column_labels) f << ',' << c;
    f << '\n';
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        f << m.row_labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.values.cols(); ++j) f << ',' << format_double(m.values(i, j));
        f << '\n';
    }
}

LabeledMatrix read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path.string());
    const auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    LabeledMatrix m;
    std::string line;
    if (!std::getline(f, line)) throw DataError(path.string() + ": empty CSV");
    auto header = split(line);
    m.column_labels.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size()) throw DataError(path.string() + ": ragged CSV row");
        m.row_labels.push_back(cells[0]);
        std::vector<double> r;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            char* end = nullptr;
            const double v = std::strtod(cells[j].c_str(), &end);
            if (end == cells[j].c_str() || *end != '\0') throw DataError(path.string() + ": bad number " + cells[j]);
            r.push_back(v);
        }
        rows.push_back(std::move(r));
    }
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.column_labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

AnalysisOutputs emit_analysis(const Eigen::MatrixXd& gap_weights, const std::filesystem::path& out_dir) {
    check_weights(gap_weights);
    std::filesystem::create_directories(out_dir);
    AnalysisOutputs out;

    const CorrelationMatrix corr = weight_correlation(gap_weights);
    out.correlation = {class_names(corr.order), class_names(corr.order), corr.values};

    std::vector<int> all(ChordLabel::kNumClasses);
    std::iota(all.begin(), all.end(), 0);
    const auto traces = [&](ChordQuality q, const std::string& tag) {
        LabeledMatrix m;
        m.column_labels = class_names(all);
        const auto maps = top_feature_maps(gap_weights, q, 4);
        m.values.resize(4, ChordLabel::kNumClasses);
        for (std::size_t i = 0; i < maps.size(); ++i) {
            m.row_labels.push_back(tag + "_map" + std::to_string(maps[i]));
            m.values.row(static_cast<Eigen::Index>(i)) = gap_weights.col(maps[i]).transpose();
        }
        return m;
    };
    out.major_traces = traces(ChordQuality::Major, "major");
    out.minor_traces = traces(ChordQuality::Minor, "minor");

    out.pitch_class.values = pitch_class_profiles(gap_weights);
    for (int p = 0; p < 12; ++p) out.pitch_class.row_labels.emplace_back(pitch_class_name(p));
    for (Eigen::Index j = 0; j < gap_weights.cols(); ++j) out.pitch_class.column_labels.push_back("map" + std::to_string(j));

    const auto emit_csv = [&](const std::string& name, const LabeledMatrix& m) {
        write_csv(out_dir / name, m);
        out.files.push_back(out_dir / name);
    };
    emit_csv("correlation.csv", out.correlation);
    emit_csv("major_maps.csv", out.major_traces);
    emit_csv("minor_maps.csv", out.minor_traces);
    emit_csv("pitch_class_profiles.csv", out.pitch_class);

    write_heatmap_svg(out_dir / "correlation.svg", out.correlation, "Correlation between class weight vectors");
    write_traces_svg(out_dir / "quality_maps.svg", {&out.major_traces, &out.minor_traces},
                     "Weights of the top major (top) and minor (bottom) feature maps per class");
    write_traces_svg(out_dir / "pitch_class_profiles.svg", {&out.pitch_class},
                     "Product of the weights of the chords containing each pitch class");
    for (const char* n : {"correlation.svg", "quality_maps.svg", "pitch_class_profiles.svg"})
        out.files.push_back(out_dir / n);
    return out;
}

AnalysisOutputs emit_analysis_plots(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir) {
    const AuditoryModel model = AuditoryModel::load(checkpoint);
    return emit_analysis(model.gap_weights(), out_dir);
}

}  // namespace chordrec
