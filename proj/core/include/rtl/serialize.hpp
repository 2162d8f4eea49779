#pragma once

#include <map>
#include <string>
#include <vector>

#include "rtl/analysis.hpp"
#include "rtl/datasets.hpp"
#include "rtl/evaluation.hpp"
#include "rtl/extraction.hpp"
#include "rtl/mask.hpp"
#include "rtl/retraining.hpp"

namespace rtl {

// All writers go through a temp file + rename so readers never observe a
// partial artifact.
void atomic_write(const std::string& path, const std::string& contents);
void atomic_write_binary(const std::string& path, const std::vector<unsigned char>& contents);

// MaskSet <-> JSON {version, layer_shapes, subset_ids, masks}. Bit-exact
// round-trip.
std::string mask_set_to_json(const MaskSet& masks, const ParamSet& reference);
MaskSet mask_set_from_json(const std::string& json_text);
void save_mask_set(const MaskSet& masks, const ParamSet& reference, const std::string& path);
MaskSet load_mask_set(const std::string& path);

// ParamSet <-> binary: magic "RTLP", version, layer count, per-layer dims,
// then little-endian doubles, weights before biases in layer order.
std::vector<unsigned char> param_set_to_bytes(const ParamSet& params);
ParamSet param_set_from_bytes(const std::vector<unsigned char>& bytes);
void save_param_set(const ParamSet& params, const std::string& path);
ParamSet load_param_set(const std::string& path);

// CSV surfaces.
std::string extraction_trace_csv(const std::vector<ExtractionTraceRow>& trace);
std::string retrain_trace_csv(const std::vector<EpochLossRow>& trace);
std::string dataset_csv(const LabeledDataset& dataset);
LabeledDataset dataset_from_csv(const std::string& csv_text);
std::string similarity_matrix_csv(const SimilarityMatrix& matrix, const std::vector<std::string>& subset_ids);
std::string collapse_curve_csv(const CollapseCurve& curve, const std::vector<std::string>& subset_ids);
std::string metrics_table_csv(const std::vector<std::pair<std::string, MetricsReport>>& rows, double sparsity);
std::string metrics_report_json(const MetricsReport& report);

// SemanticMatrix CSV: header row of subset ids, then a symmetric body.
SemanticMatrix semantic_matrix_from_csv(const std::string& csv_text);
std::string semantic_matrix_to_csv(const SemanticMatrix& matrix);

// Label-to-subset mapping as a JSON object of string keys to ints.
std::string mapping_to_json(const std::map<int, int>& mapping);
std::map<int, int> mapping_from_json(const std::string& json_text);

std::string read_file(const std::string& path);

}  // namespace rtl
