#include "dppsd/dataset.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "dppsd/parallel.hpp"
#include "dppsd/search.hpp"

namespace dppsd {
namespace {

constexpr std::array<char, 8> kMagic = {'D', 'P', 'P', 'S', 'D', 'S', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304u;
constexpr int kMaxResamples = 16;

struct Header {
  std::array<char, 8> magic;
  std::uint32_t version;
  std::uint32_t endian_tag;
  std::uint32_t n_t;
  std::uint32_t n_r;
  std::uint32_t constellation_size;
  std::uint32_t feature_dim;
  std::uint32_t target_dim;
  std::uint32_t reserved;
  std::uint64_t count;
};
static_assert(sizeof(Header) == 48);

}  // namespace

TrainingExample make_training_example(const ComplexVector& z, const ComplexMatrix& r, double noise_variance,
                                      const Constellation& constellation) {
  TrainingExample ex;
  ex.features = extract_features(z, r, noise_variance);
  auto problem = SearchProblem<double>::make(z, r, constellation);
  ex.targets.resize(constellation.size());
  for (int q = 0; q < constellation.size(); ++q) ex.targets(q) = std::sqrt(subtree_min_metric(problem, q));
  return ex;
}

Dataset generate_dataset(const DatasetOptions& options, const Constellation& constellation) {
  if (options.sample_count < 1) throw InvalidConfig("generate_dataset: sample_count must be >= 1");
  if (options.snr_low_db > options.snr_high_db) throw InvalidConfig("generate_dataset: snr_low > snr_high");
  if (options.n_t < 1 || options.n_r < options.n_t) throw InvalidConfig("generate_dataset: need n_r >= n_t >= 1");

  Dataset ds;
  ds.n_t = options.n_t;
  ds.n_r = options.n_r;
  ds.constellation_size = constellation.size();
  const auto count = static_cast<Eigen::Index>(options.sample_count);
  ds.features.resize(feature_dim(options.n_t), count);
  ds.targets.resize(constellation.size(), count);

  parallel_for(options.sample_count, [&](std::size_t i) {
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
      Rng rng = make_rng(options.seed, {i, static_cast<std::uint64_t>(attempt)});
      std::uniform_real_distribution<double> snr_dist(options.snr_low_db, options.snr_high_db);
      const double snr = snr_dist(rng);
      const double noise = options.noise_variance_override.value_or(snr_to_noise_variance(snr, options.n_t));
      const auto inst = draw_channel_instance_with_noise(options.n_t, options.n_r, constellation, noise, rng);
      try {
        const auto qr = qrd<double>(inst.h);
        const ComplexVector z = qr.q1.adjoint() * inst.y;
        const auto ex = make_training_example(z, qr.r, noise, constellation);
        ds.features.col(static_cast<Eigen::Index>(i)) = ex.features;
        ds.targets.col(static_cast<Eigen::Index>(i)) = ex.targets;
        return;
      } catch (const RankDeficient&) {
      }
    }
    throw RankDeficient("generate_dataset: too many rank-deficient draws");
  });
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  Header h{};
  h.magic = kMagic;
  h.version = kVersion;
  h.endian_tag = kEndianTag;
  h.n_t = static_cast<std::uint32_t>(dataset.n_t);
  h.n_r = static_cast<std::uint32_t>(dataset.n_r);
  h.constellation_size = static_cast<std::uint32_t>(dataset.constellation_size);
  h.feature_dim = static_cast<std::uint32_t>(dataset.features.rows());
  h.target_dim = static_cast<std::uint32_t>(dataset.targets.rows());
  h.count = static_cast<std::uint64_t>(dataset.size());
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  // Column-major storage: each column is one contiguous record half.
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    out.write(reinterpret_cast<const char*>(dataset.features.col(i).data()),
              static_cast<std::streamsize>(sizeof(double) * h.feature_dim));
    out.write(reinterpret_cast<const char*>(dataset.targets.col(i).data()),
              static_cast<std::streamsize>(sizeof(double) * h.target_dim));
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Header h{};
  if (!in.read(reinterpret_cast<char*>(&h), sizeof h)) throw FormatError("header", "file shorter than header");
  if (h.magic != kMagic) throw FormatError("magic", "not a dataset file");
  if (h.endian_tag != kEndianTag) throw FormatError("endian_tag", "byte order mismatch");
  if (h.version != kVersion) throw FormatError("version", "unsupported version " + std::to_string(h.version));
  if (h.n_t < 1) throw FormatError("n_t", "must be >= 1");
  if (h.n_r < h.n_t) throw FormatError("n_r", "must be >= n_t");
  if (h.constellation_size < 2) throw FormatError("constellation_size", "must be >= 2");
  if (h.feature_dim != static_cast<std::uint32_t>(feature_dim(static_cast<int>(h.n_t))))
    throw FormatError("feature_dim", "expected 2 n_t + 2");
  if (h.target_dim != h.constellation_size) throw FormatError("target_dim", "expected constellation_size");

  const std::uint64_t record_bytes = sizeof(double) * (std::uint64_t{h.feature_dim} + h.target_dim);
  const auto file_size = std::filesystem::file_size(path);
  if (file_size != sizeof h + record_bytes * h.count)
    throw FormatError("count", "record count does not match file size");

  Dataset ds;
  ds.n_t = static_cast<int>(h.n_t);
  ds.n_r = static_cast<int>(h.n_r);
  ds.constellation_size = static_cast<int>(h.constellation_size);
  ds.features.resize(h.feature_dim, static_cast<Eigen::Index>(h.count));
  ds.targets.resize(h.target_dim, static_cast<Eigen::Index>(h.count));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    in.read(reinterpret_cast<char*>(ds.features.col(i).data()), static_cast<std::streamsize>(sizeof(double) * h.feature_dim));
    in.read(reinterpret_cast<char*>(ds.targets.col(i).data()), static_cast<std::streamsize>(sizeof(double) * h.target_dim));
    if (!in) throw FormatError("records", "truncated at record " + std::to_string(i));
  }
  return ds;
}

void export_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  const Eigen::Index n = dataset.n_t;
  out << "zhz";
  for (Eigen::Index k = 0; k < n; ++k) out << ",re_rhz_" << k;
  for (Eigen::Index k = 0; k < n; ++k) out << ",im_rhz_" << k;
  out << ",noise_variance";
  for (Eigen::Index q = 0; q < dataset.targets.rows(); ++q) out << ",g_" << q;
  out << '\n';
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    for (Eigen::Index f = 0; f < dataset.features.rows(); ++f) out << (f ? "," : "") << dataset.features(f, i);
    for (Eigen::Index q = 0; q < dataset.targets.rows(); ++q) out << ',' << dataset.targets(q, i);
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace dppsd
