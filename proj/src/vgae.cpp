#include "vigraph/vgae.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "vigraph/errors.hpp"

namespace vigraph {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

constexpr char kMagic[8] = {'V', 'G', 'C', 'K', '0', '0', '0', '1'};

}  // namespace

bool VgaeParameters::all_finite() const {
  for (const Matrix* t : tensors()) {
    if (!t->allFinite()) return false;
  }
  return true;
}

void VgaeParameters::check_shapes() const {
  const auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index c, std::string_view name) {
    require(m.rows() == r && m.cols() == c, std::string(name) + " is " + shape(m) + ", expected " +
                                                std::to_string(r) + "x" + std::to_string(c));
  };
  expect(encoder_weight, dims.input, dims.hidden, "encoder_weight");
  expect(mu_weight, dims.hidden, dims.latent, "mu_weight");
  expect(logsigma_weight, dims.hidden, dims.latent, "logsigma_weight");
  expect(decoder_weight, dims.latent, dims.hidden, "decoder_weight");
  expect(decoder_bias, 1, dims.hidden, "decoder_bias");
}

bool operator==(const VgaeParameters& a, const VgaeParameters& b) {
  if (a.dims != b.dims || a.seed != b.seed) return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols() || *ta[i] != *tb[i]) {
      return false;
    }
  }
  return true;
}

VgaeParameters init_parameters(VgaeDims dims, std::uint64_t seed) {
  require(dims.input > 0 && dims.hidden > 0 && dims.latent > 0, "dimensions must be positive");
  VgaeParameters p;
  p.dims = dims;
  p.seed = seed;
  p.encoder_weight.resize(dims.input, dims.hidden);
  p.mu_weight.resize(dims.hidden, dims.latent);
  p.logsigma_weight.resize(dims.hidden, dims.latent);
  p.decoder_weight.resize(dims.latent, dims.hidden);
  p.decoder_bias.resize(1, dims.hidden);

  Rng rng(seed);
  const std::array<int, 5> fan_in = {dims.input, dims.hidden, dims.hidden, dims.latent, dims.latent};
  auto tensors = p.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const double bound = kInitGain[t] / std::sqrt(static_cast<double>(fan_in[t]));
    Matrix& m = *tensors[t];
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  }
  return p;
}

Matrix encode(const Matrix& features, const NormalizedAdjacency& adjacency,
              const VgaeParameters& params) {
  require(features.cols() == params.encoder_weight.rows(),
          "features have " + std::to_string(features.cols()) + " columns, encoder expects " +
              std::to_string(params.encoder_weight.rows()));
  require(adjacency.matrix.rows() == features.rows(), "adjacency and features disagree on N");
  Matrix projected = features * params.encoder_weight;
  Matrix pre = adjacency.matrix * projected;
  return pre.cwiseMax(0.0);
}

VariationalHeads variational_heads(const Matrix& hidden, const NormalizedAdjacency& adjacency,
                                   const VgaeParameters& params) {
  require(hidden.cols() == params.mu_weight.rows(),
          "hidden has " + std::to_string(hidden.cols()) + " columns, heads expect " +
              std::to_string(params.mu_weight.rows()));
  require(adjacency.matrix.rows() == hidden.rows(), "adjacency and hidden disagree on N");
  Matrix propagated = adjacency.matrix * hidden;
  VariationalHeads out;
  out.mu = propagated * params.mu_weight;
  out.log_sigma = (propagated * params.logsigma_weight).cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax);
  return out;
}

Matrix reparameterize(const Matrix& mu, const Matrix& log_sigma, const Matrix& epsilon) {
  require(mu.rows() == log_sigma.rows() && mu.cols() == log_sigma.cols() &&
              mu.rows() == epsilon.rows() && mu.cols() == epsilon.cols(),
          "mu, log_sigma and epsilon must share a shape");
  return mu.array() + log_sigma.array().exp() * epsilon.array();
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  rng.fill_normal(std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

EncodingBundle reparameterize_pair(const Matrix& mu, const Matrix& log_sigma, Matrix epsilon1,
                                   Matrix epsilon2) {
  EncodingBundle b;
  b.z1 = reparameterize(mu, log_sigma, epsilon1);
  b.z2 = reparameterize(mu, log_sigma, epsilon2);
  b.mu = mu;
  b.log_sigma = log_sigma;
  b.epsilon1 = std::move(epsilon1);
  b.epsilon2 = std::move(epsilon2);
  return b;
}

EncodingBundle reparameterize_pair(const Matrix& mu, const Matrix& log_sigma, Rng& rng) {
  require(mu.rows() == log_sigma.rows() && mu.cols() == log_sigma.cols(),
          "mu and log_sigma must share a shape");
  Matrix e1 = standard_normal(mu.rows(), mu.cols(), rng);
  Matrix e2 = standard_normal(mu.rows(), mu.cols(), rng);
  return reparameterize_pair(mu, log_sigma, std::move(e1), std::move(e2));
}

EncodingBundle encode_bundle(const Matrix& features, const NormalizedAdjacency& adjacency,
                             const VgaeParameters& params, Rng& rng) {
  Matrix hidden = encode(features, adjacency, params);
  VariationalHeads heads = variational_heads(hidden, adjacency, params);
  EncodingBundle b = reparameterize_pair(heads.mu, heads.log_sigma, rng);
  b.hidden = std::move(hidden);
  return b;
}

Matrix decode_features(const Matrix& z, const VgaeParameters& params) {
  require(z.cols() == params.decoder_weight.rows(),
          "latent has " + std::to_string(z.cols()) + " columns, decoder expects " +
              std::to_string(params.decoder_weight.rows()));
  Matrix pre = z * params.decoder_weight;
  pre.rowwise() += params.decoder_bias.row(0);
  return pre.cwiseMax(0.0);
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix reconstruct_adjacency(const Matrix& x_tilde) {
  require(x_tilde.allFinite(), "decoded features must be finite");
  Matrix logits = x_tilde * x_tilde.transpose();
  return logits.unaryExpr([](double v) { return stable_sigmoid(v); });
}

void save_checkpoint(const VgaeParameters& params, const std::filesystem::path& path) {
  params.check_shapes();
  json header;
  header["format"] = "vigraph-checkpoint";
  header["version"] = 1;
  header["dims"] = {{"input", params.dims.input},
                    {"hidden", params.dims.hidden},
                    {"latent", params.dims.latent}};
  header["seed"] = params.seed;
  header["dtype"] = "f64le";
  json table = json::array();
  std::uint64_t offset = 0;
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Matrix& m = *tensors[i];
    table.push_back({{"name", VgaeParameters::kTensorNames[i]},
                     {"shape", {m.rows(), m.cols()}},
                     {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * 8;
  }
  header["tensors"] = table;
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  std::uint64_t len = header_text.size();
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((len >> (8 * b)) & 0xFF));
  out += header_text;
  for (const Matrix* m : tensors) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(m->data()[i]);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  detail::write_file(path, out);
}

VgaeParameters load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  auto fail = [&](const std::string& why) -> Error {
    return Error("checkpoint " + path.string() + ": " + why);
  };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw fail("bad magic");
  }
  auto read_u64 = [&](std::size_t at) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
    }
    return v;
  };
  const std::uint64_t header_len = read_u64(8);
  if (16 + header_len > bytes.size()) throw fail("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::exception& e) {
    throw fail(std::string("unreadable header: ") + e.what());
  }
  const std::size_t data_start = 16 + header_len;

  VgaeParameters p;
  try {
    p.dims.input = header.at("dims").at("input").get<int>();
    p.dims.hidden = header.at("dims").at("hidden").get<int>();
    p.dims.latent = header.at("dims").at("latent").get<int>();
    p.seed = header.at("seed").get<std::uint64_t>();
    auto tensors = p.tensors();
    for (const json& entry : header.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      std::size_t slot = tensors.size();
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (VgaeParameters::kTensorNames[i] == name) slot = i;
      }
      if (slot == tensors.size()) throw fail("unknown tensor '" + name + "'");
      const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
      const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      if (data_start + offset + static_cast<std::uint64_t>(rows * cols) * 8 > bytes.size()) {
        throw fail("tensor '" + name + "' runs past end of file");
      }
      Matrix& m = *tensors[slot];
      m.resize(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = std::bit_cast<double>(read_u64(data_start + offset + 8 * i));
      }
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }
  p.check_shapes();
  return p;
}

}  // namespace vigraph
