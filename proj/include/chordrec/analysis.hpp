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


#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace chordrec {

enum class ChordQuality { Major, Minor };

/// Class indices ordered by the circle of fifths: majors from C (C, G, D, ...),
/// minors from a so that each minor sits at its relative major's position, then N.
std::vector<int> circle_of_fifths_order();

struct CorrelationMatrix {
    Eigen::MatrixXd values;  ///< 25 x 25 in `order`; NaN where a row has zero variance
    std::vector<int> order;  ///< class index of each row/column
    std::vector<int> undefined;  ///< classes whose weight row has zero variance
};

/// Pearson correlation between the class weight vectors (rows of `gap_weights`).
CorrelationMatrix weight_correlation(const Eigen::MatrixXd& gap_weights,
                                     const std::vector<int>& order = circle_of_fifths_order());

/// The k feature maps with the largest mean weight over the 12 classes of `quality`.
/// Ties go to the lower map index.
std::vector<int> top_feature_maps(const Eigen::MatrixXd& gap_weights, ChordQuality quality, std::size_t k = 4);

/// The six major/minor triads containing pitch class p: majors rooted at p, p-4,
/// p-7 and minors rooted at p, p-3, p-7 (class indices).
std::array<int, 6> chords_containing(int pitch_class);

/// 12 x 128: row p is the element-wise product of the weight rows of
/// chords_containing(p). Signs are kept as they come out of the product.
Eigen::MatrixXd pitch_class_profiles(const Eigen::MatrixXd& gap_weights);

/// A matrix with row and column labels, as written to and read from CSV.
struct LabeledMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    Eigen::MatrixXd values;
};

/// First row: "label" then the column labels. Each following row: its label
/// then the values printed with 17 significant digits.
void write_csv(const std::filesystem::path& path, const LabeledMatrix& m);
LabeledMatrix read_csv(const std::filesystem::path& path);

struct AnalysisOutputs {
    LabeledMatrix correlation;       ///< 25 x 25
    LabeledMatrix major_traces;      ///< 4 x 25: selected maps' weights to every class
    LabeledMatrix minor_traces;      ///< 4 x 25
    LabeledMatrix pitch_class;       ///< 12 x 128
    std::vector<std::filesystem::path> files;
};

/// Runs every analysis on the given 25 x 128 weights and writes a CSV and an SVG for each.
AnalysisOutputs emit_analysis(const Eigen::MatrixXd& gap_weights, const std::filesystem::path& out_dir);

/// Loads the model checkpoint and calls emit_analysis on its classifier weights.
AnalysisOutputs emit_analysis_plots(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir);

}  // namespace chordrec
