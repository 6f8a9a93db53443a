#ifndef TERRAIN_LOOP_RASTER_IO_HPP
#define TERRAIN_LOOP_RASTER_IO_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "terrain_loop/errors.hpp"
#include "terrain_loop/raster.hpp"

namespace terrain_loop {

/// Writes one channel as little-endian float32, row-major, with a JSON
/// sidecar at `<path>.json` describing the georeference.
inline void write_raster_f32(const std::filesystem::path& path, const GradientMap& map,
                             RasterChannel channel) {
  const std::vector<double>& data = map.channel(channel);
  if (data.empty()) throw IoError("raster channel is empty");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  std::vector<float> buf(data.size());
  std::transform(data.begin(), data.end(), buf.begin(),
                 [](double v) { return static_cast<float>(v); });
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));

  nlohmann::json sidecar{{"origin", {map.origin_x, map.origin_y}},
                         {"resolution", map.resolution},
                         {"width", map.width},
                         {"height", map.height},
                         {"channel", raster_channel_name(channel)},
                         {"prior_var", map.prior_var}};
  std::ofstream side(path.string() + ".json");
  if (!side) throw IoError("cannot write '" + path.string() + ".json'");
  side << sidecar.dump(2) << "\n";
}

/// Reads a channel written by write_raster_f32 into `map`. Georeference
/// fields are taken from the sidecar; they must agree across channels.
inline void read_raster_f32(const std::filesystem::path& path, GradientMap& map,
                            RasterChannel channel) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw IoError("cannot open '" + path.string() + ".json'");
  nlohmann::json sidecar = nlohmann::json::parse(side);
  const int width = sidecar.at("width").get<int>();
  const int height = sidecar.at("height").get<int>();
  if (map.width != 0 && (map.width != width || map.height != height)) {
    throw IoError("raster channel shape mismatch at '" + path.string() + "'");
  }
  map.width = width;
  map.height = height;
  map.origin_x = sidecar.at("origin")[0].get<double>();
  map.origin_y = sidecar.at("origin")[1].get<double>();
  map.resolution = sidecar.at("resolution").get<double>();
  if (sidecar.contains("prior_var")) map.prior_var = sidecar.at("prior_var").get<double>();

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<float> buf(map.size());
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw IoError("raster file '" + path.string() + "' is truncated");
  }
  std::vector<double>& data = channel == RasterChannel::Grad ? map.grad
                              : channel == RasterChannel::Var ? map.var
                                                              : map.elev;
  data.resize(buf.size());
  std::transform(buf.begin(), buf.end(), data.begin(),
                 [](float v) { return static_cast<double>(v); });
}

/// 16-bit PGM preview with min/max scaling; scaling recorded in the sidecar.
/// Visualization only, not part of the metric pipeline.
inline void write_raster_pgm(const std::filesystem::path& path, const GradientMap& map,
                             RasterChannel channel) {
  const std::vector<double>& data = map.channel(channel);
  if (data.empty()) throw IoError("raster channel is empty");
  const auto [mn_it, mx_it] = std::minmax_element(data.begin(), data.end());
  const double mn = *mn_it, mx = *mx_it;
  const double scale = (mx > mn) ? 65535.0 / (mx - mn) : 0.0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "P5\n" << map.width << " " << map.height << "\n65535\n";
  for (double v : data) {
    const auto q = static_cast<std::uint16_t>(std::clamp((v - mn) * scale, 0.0, 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};  // big-endian per PGM
    out.write(bytes, 2);
  }
  nlohmann::json sidecar{{"channel", raster_channel_name(channel)},
                         {"min", mn},
                         {"max", mx},
                         {"width", map.width},
                         {"height", map.height}};
  std::ofstream side(path.string() + ".json");
  side << sidecar.dump(2) << "\n";
}

}  // namespace terrain_loop

#endif
