#pragma once

#include "laplab/spectral.hpp"

#include <json.hpp>

namespace laplab {

using json = nlohmann::json;

/// Cloud CSV: header "# ambient_dim=N intrinsic_dim=d seed=S mode=M",
/// then one row per point: coordinates, piece id, chart parameters and
/// the annotation columns (left empty for regular points).
void write_cloud_csv(const AnnotatedCloud& cloud, const std::string& path);
AnnotatedCloud read_cloud_csv(const std::string& path);

json cloud_to_json(const AnnotatedCloud& cloud);
AnnotatedCloud cloud_from_json(const json& j);

/// External point sets: the same CSV minus piece/parameter/annotation
/// columns (any present are ignored); intrinsic_dim must be declared in
/// the header or passed explicitly.
AnnotatedCloud read_external_csv(const std::string& path, int intrinsic_dim = -1);

/// Sparse matrix export: one JSON header line {n, t, d, truncation},
/// then "row col value" triplets.
void write_matrix_coo(const SpMat& L, const LaplacianConfig& cfg,
                      const std::string& path);

/// Field/operator evaluations: CSV of (point index, f, Lf).
void write_apply_csv(const std::vector<double>& fvals,
                     const std::vector<double>& lvals, const std::string& path);

json prediction_to_json(const PredictionReport& r);
json spectrum_to_json(const SpectrumReport& r, bool include_vectors = false);
json scaling_to_json(const ScalingFit& fit);
json detection_to_json(const DetectionReport& r);
json deviation_to_json(const DeviationReport& r);
json profile_to_json(const ProfileFit& r);

/// Two-column (log t, log |L|) CSV for one scaling fit.
void write_scaling_csv(const ScalingFit& fit, const std::string& path);

/// Eigenvectors as CSV (point index, mode 0..k-1 values).
void write_eigenvectors_csv(const SpectrumReport& r, const std::string& path);

void write_json(const json& j, const std::string& path);
json read_json(const std::string& path);

/// All numeric text output is printed with 17 significant digits.
std::string format_double(double v);

}  // namespace laplab
