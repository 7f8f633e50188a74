#include "zscore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "zscore/error.hpp"

namespace zscore {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "zscore-checkpoint";
constexpr int kFormatVersion = 1;

void put_f64(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

double get_f64(const std::string& blob, std::size_t index) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[index * 8 + static_cast<std::size_t>(i)]))
            << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

struct NamedMatrix {
  std::string name;
  const Matrix* value;
};

}  // namespace

std::string blob_path_for(const std::string& manifest_path) {
  std::filesystem::path p(manifest_path);
  p.replace_extension(".bin");
  return p.string();
}

void save_checkpoint(const Checkpoint& ck, const std::string& manifest_path) {
  const ModelParams& params = ck.params;
  const Matrix mean = params.normalizer.mean;
  const Matrix std_dev = params.normalizer.std;

  std::vector<NamedMatrix> all;
  for (const auto& t : params.tensors()) all.push_back({t.name, &t.value});
  all.push_back({"normalizer.mean", &mean});
  all.push_back({"normalizer.std", &std_dev});

  std::string blob;
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& nm : all) {
    const Matrix& m = *nm.value;
    tensors.push_back({{"name", nm.name}, {"shape", {m.rows(), m.cols()}}, {"offset", offset}});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(blob, m(r, c));
    }
    offset += static_cast<std::size_t>(m.size());
  }

  const std::string blob_path = blob_path_for(manifest_path);
  json manifest = {
      {"format", kFormat},
      {"version", kFormatVersion},
      {"blob", std::filesystem::path(blob_path).filename().string()},
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"layout", "row-major"},
      {"element_count", offset},
      {"role", std::string(to_string(ck.role))},
      {"feature_names", ck.feature_names},
      {"seed", params.config().seed},
      {"target_scale", params.target_scale},
      {"val_mse", ck.val_mse},
      {"best_epoch", ck.best_epoch},
      {"model_config", json_io::to_json(params.config())},
      {"train_config", json_io::to_json(ck.train_config)},
      {"tensors", tensors},
  };

  std::ofstream bin(blob_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw Error(ErrorCode::Io, "cannot write checkpoint blob '" + blob_path + "'");
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::ofstream man(manifest_path, std::ios::binary | std::ios::trunc);
  if (!man) throw Error(ErrorCode::Io, "cannot write checkpoint manifest '" + manifest_path + "'");
  man << manifest.dump(2) << '\n';
  if (!bin || !man) throw Error(ErrorCode::Io, "checkpoint write failed");
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
  std::ifstream man(manifest_path, std::ios::binary);
  if (!man) throw Error(ErrorCode::Io, "cannot open checkpoint manifest '" + manifest_path + "'");
  json manifest;
  try {
    manifest = json::parse(man);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kFormatVersion) {
    throw Error(ErrorCode::Io, "unsupported checkpoint format");
  }

  const auto blob_path =
      (std::filesystem::path(manifest_path).parent_path() / manifest.at("blob").get<std::string>()).string();
  std::ifstream bin(blob_path, std::ios::binary);
  if (!bin) throw Error(ErrorCode::Io, "cannot open checkpoint blob '" + blob_path + "'");
  std::stringstream ss;
  ss << bin.rdbuf();
  const std::string blob = ss.str();
  const auto element_count = manifest.at("element_count").get<std::size_t>();
  if (blob.size() != element_count * 8) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint blob size does not match the manifest");
  }

  ModelConfig mcfg;
  json_io::merge(mcfg, manifest.at("model_config"));
  Checkpoint ck;
  json_io::merge(ck.train_config, manifest.at("train_config"));
  auto role = parse_role(manifest.at("role").get<std::string>());
  if (!role) throw Error(ErrorCode::Io, "checkpoint has an unknown role");
  ck.role = *role;
  ck.feature_names = manifest.at("feature_names").get<std::vector<std::string>>();
  ck.val_mse = manifest.at("val_mse").get<double>();
  ck.best_epoch = manifest.at("best_epoch").get<int>();

  std::vector<Tensor> tensors;
  Normalizer normalizer;
  for (const auto& entry : manifest.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    const auto offset = entry.at("offset").get<std::size_t>();
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
        offset + static_cast<std::size_t>(shape[0] * shape[1]) > element_count) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' lies outside the blob");
    }
    Matrix m(shape[0], shape[1]);
    std::size_t k = offset;
    for (Eigen::Index r = 0; r < shape[0]; ++r) {
      for (Eigen::Index c = 0; c < shape[1]; ++c) m(r, c) = get_f64(blob, k++);
    }
    if (name == "normalizer.mean") {
      normalizer.mean = m.col(0);
    } else if (name == "normalizer.std") {
      normalizer.std = m.col(0);
    } else {
      tensors.push_back(Tensor{name, std::move(m), true});
    }
  }
  ck.params = assemble_params(mcfg, std::move(tensors));
  if (normalizer.mean.size() != static_cast<Eigen::Index>(mcfg.input_dim) ||
      normalizer.std.size() != normalizer.mean.size()) {
    throw Error(ErrorCode::ShapeMismatch, "normalizer statistics do not match input_dim");
  }
  ck.params.normalizer = std::move(normalizer);
  ck.params.target_scale = manifest.at("target_scale").get<double>();
  return ck;
}

}  // namespace zscore
