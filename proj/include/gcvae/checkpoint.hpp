#pragma once

// Binary checkpoint: model kind, latent size, dataset schema with its
// normalisation statistics, and both networks. Layout in docs/FORMATS.md.

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "data.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "nn.hpp"

namespace gcvae {

inline constexpr char kCheckpointMagic[8] = {'G', 'C', 'V', 'A', 'E', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  DatasetSchema schema;
};

inline void write_checkpoint(std::ostream& os, const Model& model, const DatasetSchema& schema) {
  schema.check_normalization();
  if (!(schema.layout() == model.layout)) throw SchemaError("checkpoint: schema does not match the model layout");
  os.write(kCheckpointMagic, 8);
  io::write_u32(os, kCheckpointVersion);
  io::write_u32(os, static_cast<std::uint32_t>(model.kind));
  io::write_u32(os, static_cast<std::uint32_t>(model.latent));
  io::write_u32(os, static_cast<std::uint32_t>(schema.columns.size()));
  std::size_t ic = 0;
  for (const auto& c : schema.columns) {
    io::write_string(os, c.name);
    if (c.role == ColumnRole::continuous) {
      io::write_u32(os, 0);
      io::write_f64(os, schema.mean[ic]);
      io::write_f64(os, schema.stddev[ic]);
      ++ic;
    } else {
      io::write_u32(os, 1);
      io::write_u32(os, static_cast<std::uint32_t>(c.levels.size()));
      for (const auto& l : c.levels) io::write_string(os, l);
    }
  }
  write_mlp(os, model.encoder);
  write_mlp(os, model.decoder);
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw FormatError("not a checkpoint file");
  const std::uint32_t version = io::read_u32(is);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t kind = io::read_u32(is);
  if (kind > 2) throw FormatError("unknown model kind in checkpoint");
  const std::uint32_t K = io::read_u32(is);
  const std::uint32_t ncol = io::read_u32(is);
  if (K == 0 || K > (1u << 16) || ncol == 0 || ncol > (1u << 16)) throw FormatError("checkpoint header out of range");

  Checkpoint ck;
  for (std::uint32_t i = 0; i < ncol; ++i) {
    ColumnSpec c;
    c.name = io::read_string(is);
    const std::uint32_t role = io::read_u32(is);
    if (role == 0) {
      c.role = ColumnRole::continuous;
      const double m = io::read_f64(is);
      const double s = io::read_f64(is);
      if (!std::isfinite(m) || !(s > 0.0) || !std::isfinite(s)) throw FormatError("bad normalisation statistics");
      ck.schema.mean.push_back(m);
      ck.schema.stddev.push_back(s);
    } else if (role == 1) {
      c.role = ColumnRole::categorical;
      const std::uint32_t J = io::read_u32(is);
      if (J < 2 || J > (1u << 16)) throw FormatError("categorical cardinality out of range");
      for (std::uint32_t j = 0; j < J; ++j) c.levels.push_back(io::read_string(is));
    } else {
      throw FormatError("unknown column role in checkpoint");
    }
    ck.schema.columns.push_back(std::move(c));
  }

  Model& m = ck.model;
  m.kind = static_cast<ModelKind>(kind);
  m.layout = ck.schema.layout();
  m.latent = K;
  m.encoder = read_mlp(is);
  m.decoder = read_mlp(is);
  if (m.encoder.input_dim() != m.layout.one_hot_width() || m.encoder.output_dim() != 2 * m.latent ||
      m.decoder.input_dim() != m.latent || m.decoder.output_dim() != head_width(m.kind, m.layout))
    throw FormatError("checkpoint networks do not match the declared model");
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint");
  return ck;
}

inline void save_checkpoint(const std::string& path, const Model& model, const DatasetSchema& schema) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  write_checkpoint(f, model, schema);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return read_checkpoint(f);
}

}  // namespace gcvae
