#include "rtl/serialize.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rtl {

namespace {

using nlohmann::json;

constexpr char kParamMagic[4] = {'R', 'T', 'L', 'P'};
constexpr std::uint32_t kParamVersion = 1;
constexpr int kMaskVersion = 1;

static_assert(std::endian::native == std::endian::little, "ParamSet binary format assumes a little-endian host");

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  out.insert(out.end(), p, p + 4);
}

void append_doubles(std::vector<unsigned char>& out, const std::vector<double>& v) {
  const auto* p = reinterpret_cast<const unsigned char*>(v.data());
  out.insert(out.end(), p, p + v.size() * sizeof(double));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::uint32_t read_u32() {
    require(4);
    std::uint32_t v;
    std::memcpy(&v, &bytes_[pos_], 4);
    pos_ += 4;
    return v;
  }

  std::vector<double> read_doubles(std::size_t count) {
    require(count * sizeof(double));
    std::vector<double> v(count);
    std::memcpy(v.data(), &bytes_[pos_], count * sizeof(double));
    pos_ += count * sizeof(double);
    return v;
  }

  void read_raw(void* dst, std::size_t n) {
    require(n);
    std::memcpy(dst, &bytes_[pos_], n);
    pos_ += n;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void require(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("ParamSet binary: truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void atomic_write_binary(const std::string& path, const std::vector<unsigned char>& contents) {
  atomic_write(path, std::string(contents.begin(), contents.end()));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string mask_set_to_json(const MaskSet& masks, const ParamSet& reference) {
  json doc;
  doc["version"] = kMaskVersion;
  json shapes = json::array();
  for (const auto& l : reference.layers) {
    shapes.push_back({l.weight.shape[0], l.weight.shape[1]});
  }
  doc["layer_shapes"] = shapes;
  doc["subset_ids"] = masks.subset_ids;
  json all = json::array();
  for (const auto& m : masks.masks) {
    if (!m.congruent_with(reference)) throw std::invalid_argument("mask_set_to_json: mask not congruent with reference");
    json per_layer = json::array();
    for (const auto& bits : m.layers) {
      json arr = json::array();
      for (std::uint8_t b : bits) arr.push_back(static_cast<int>(b));
      per_layer.push_back(std::move(arr));
    }
    all.push_back(std::move(per_layer));
  }
  doc["masks"] = std::move(all);
  return doc.dump(1);
}

MaskSet mask_set_from_json(const std::string& json_text) {
  json doc = json::parse(json_text);
  if (doc.at("version").get<int>() != kMaskVersion) {
    throw std::runtime_error("MaskSet JSON: unsupported version " + doc.at("version").dump());
  }
  MaskSet masks;
  masks.subset_ids = doc.at("subset_ids").get<std::vector<std::string>>();
  const auto shapes = doc.at("layer_shapes");
  for (const auto& per_layer : doc.at("masks")) {
    BinaryMask m;
    if (per_layer.size() != shapes.size()) throw std::runtime_error("MaskSet JSON: layer count mismatch");
    for (std::size_t l = 0; l < per_layer.size(); ++l) {
      const std::size_t expected = shapes[l][0].get<std::size_t>() * shapes[l][1].get<std::size_t>();
      std::vector<std::uint8_t> bits;
      for (const auto& b : per_layer[l]) {
        const int v = b.get<int>();
        if (v != 0 && v != 1) throw std::runtime_error("MaskSet JSON: bit outside {0,1}");
        bits.push_back(static_cast<std::uint8_t>(v));
      }
      if (bits.size() != expected) throw std::runtime_error("MaskSet JSON: layer size mismatch");
      m.layers.push_back(std::move(bits));
    }
    masks.masks.push_back(std::move(m));
  }
  return masks;
}

void save_mask_set(const MaskSet& masks, const ParamSet& reference, const std::string& path) {
  atomic_write(path, mask_set_to_json(masks, reference));
}

MaskSet load_mask_set(const std::string& path) { return mask_set_from_json(read_file(path)); }

std::vector<unsigned char> param_set_to_bytes(const ParamSet& params) {
  std::vector<unsigned char> out;
  out.insert(out.end(), kParamMagic, kParamMagic + 4);
  append_u32(out, kParamVersion);
  append_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    append_u32(out, static_cast<std::uint32_t>(l.weight.shape[0]));
    append_u32(out, static_cast<std::uint32_t>(l.weight.shape[1]));
  }
  for (const auto& l : params.layers) {
    append_doubles(out, l.weight.data);
    append_doubles(out, l.bias.data);
  }
  return out;
}

ParamSet param_set_from_bytes(const std::vector<unsigned char>& bytes) {
  ByteReader reader(bytes);
  char magic[4];
  reader.read_raw(magic, 4);
  if (std::memcmp(magic, kParamMagic, 4) != 0) throw std::runtime_error("ParamSet binary: bad magic");
  const std::uint32_t version = reader.read_u32();
  if (version != kParamVersion) throw std::runtime_error("ParamSet binary: unsupported version " + std::to_string(version));
  const std::uint32_t layer_count = reader.read_u32();
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const std::size_t out = reader.read_u32();
    const std::size_t in = reader.read_u32();
    dims.emplace_back(out, in);
  }
  ParamSet params;
  for (const auto& [out, in] : dims) {
    Layer l{Tensor::matrix(out, in), Tensor({out})};
    l.weight.data = reader.read_doubles(out * in);
    l.bias.data = reader.read_doubles(out);
    params.layers.push_back(std::move(l));
  }
  if (!reader.exhausted()) throw std::runtime_error("ParamSet binary: trailing bytes");
  params.check_chain();
  return params;
}

void save_param_set(const ParamSet& params, const std::string& path) {
  atomic_write_binary(path, param_set_to_bytes(params));
}

ParamSet load_param_set(const std::string& path) {
  const std::string text = read_file(path);
  return param_set_from_bytes(std::vector<unsigned char>(text.begin(), text.end()));
}

std::string extraction_trace_csv(const std::vector<ExtractionTraceRow>& trace) {
  std::string out = "round,subset_id,sparsity,loss\n";
  for (const auto& row : trace) {
    out += std::to_string(row.round) + "," + row.subset_id + "," + format_double(row.sparsity) + "," +
           format_double(row.train_loss) + "\n";
  }
  return out;
}

std::string retrain_trace_csv(const std::vector<EpochLossRow>& trace) {
  std::string out = "epoch,subset_id,mean_loss\n";
  for (const auto& row : trace) {
    out += std::to_string(row.epoch) + "," + row.subset_id + "," + format_double(row.mean_loss) + "\n";
  }
  return out;
}

std::string dataset_csv(const LabeledDataset& dataset) {
  std::string out;
  const std::size_t dim = dataset.feature_dim();
  for (std::size_t j = 0; j < dim; ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) out += format_double(dataset.features[i][j]) + ",";
    out += std::to_string(dataset.labels[i]) + "\n";
  }
  return out;
}

LabeledDataset dataset_from_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset CSV: empty");
  std::size_t dim = 0;
  for (char c : line) {
    if (c == ',') ++dim;
  }
  LabeledDataset ds;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> feats;
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("dataset CSV: short row");
      feats.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell)) throw std::runtime_error("dataset CSV: missing label");
    const int label = std::stoi(cell);
    max_label = std::max(max_label, label);
    ds.features.push_back(std::move(feats));
    ds.labels.push_back(label);
  }
  ds.class_count = max_label + 1;
  return ds;
}

std::string similarity_matrix_csv(const SimilarityMatrix& matrix, const std::vector<std::string>& subset_ids) {
  std::string out = "subset_id";
  for (std::size_t j = 0; j < matrix.size; ++j) {
    out += "," + (j < subset_ids.size() ? subset_ids[j] : std::to_string(j));
  }
  out += "\n";
  for (std::size_t i = 0; i < matrix.size; ++i) {
    out += (i < subset_ids.size() ? subset_ids[i] : std::to_string(i));
    for (std::size_t j = 0; j < matrix.size; ++j) out += "," + format_double(matrix.at(i, j));
    out += "\n";
  }
  return out;
}

std::string collapse_curve_csv(const CollapseCurve& curve, const std::vector<std::string>& subset_ids) {
  std::string out = "sparsity,subset_id,metric,mean_jaccard\n";
  for (const auto& p : curve.points) {
    for (std::size_t k = 0; k < p.metric.size(); ++k) {
      out += format_double(p.sparsity) + "," + (k < subset_ids.size() ? subset_ids[k] : std::to_string(k)) + "," +
             format_double(p.metric[k]) + "," + format_double(p.mean_jaccard[k]) + "\n";
    }
  }
  return out;
}

std::string metrics_table_csv(const std::vector<std::pair<std::string, MetricsReport>>& rows, double sparsity) {
  std::string out = "method,sparsity,balanced_accuracy,precision,recall,params\n";
  for (const auto& [method, report] : rows) {
    std::size_t params = report.params.union_count + report.params.dense;
    out += method + "," + format_double(sparsity) + "," + format_double(report.macro_balanced_accuracy) + "," +
           format_double(report.macro_precision) + "," + format_double(report.macro_recall) + "," +
           std::to_string(params) + "\n";
  }
  return out;
}

std::string metrics_report_json(const MetricsReport& report) {
  json doc;
  // Precision and recall here are macro-averaged one-vs-rest binary metrics
  // over the full test set, with an uncalibrated logit > 0 decision rule.
  doc["metric_convention"] = "macro-averaged one-vs-rest binary detectors, threshold logit>0";
  doc["subset_ids"] = report.subset_ids;
  doc["balanced_accuracy"] = report.balanced_accuracy;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["macro_balanced_accuracy"] = report.macro_balanced_accuracy;
  doc["macro_precision"] = report.macro_precision;
  doc["macro_recall"] = report.macro_recall;
  doc["params_per_mask"] = report.params.per_mask;
  doc["params_union"] = report.params.union_count;
  doc["params_dense"] = report.params.dense;
  json confusions = json::array();
  for (const auto& c : report.confusions) {
    confusions.push_back({{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}});
  }
  doc["confusions"] = std::move(confusions);
  return doc.dump(1);
}

SemanticMatrix semantic_matrix_from_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("semantic CSV: empty");

  SemanticMatrix m;
  {
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) m.subset_ids.push_back(cell);
  }
  m.size = m.subset_ids.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      m.values.push_back(std::stod(cell));
      ++col;
    }
    if (col != m.size) throw std::runtime_error("semantic CSV: row width mismatch");
  }
  m.validate();
  return m;
}

std::string semantic_matrix_to_csv(const SemanticMatrix& matrix) {
  std::string out;
  for (std::size_t j = 0; j < matrix.size; ++j) {
    if (j) out += ",";
    out += j < matrix.subset_ids.size() ? matrix.subset_ids[j] : std::to_string(j);
  }
  out += "\n";
  for (std::size_t i = 0; i < matrix.size; ++i) {
    for (std::size_t j = 0; j < matrix.size; ++j) {
      if (j) out += ",";
      out += format_double(matrix.at(i, j));
    }
    out += "\n";
  }
  return out;
}

std::string mapping_to_json(const std::map<int, int>& mapping) {
  json doc = json::object();
  for (const auto& [label, subset] : mapping) doc[std::to_string(label)] = subset;
  return doc.dump(1);
}

std::map<int, int> mapping_from_json(const std::string& json_text) {
  json doc = json::parse(json_text);
  if (!doc.is_object()) throw std::runtime_error("mapping: expected a JSON object of label -> subset");
  std::map<int, int> mapping;
  for (const auto& [key, value] : doc.items()) mapping[std::stoi(key)] = value.get<int>();
  return mapping;
}

}  // namespace rtl
