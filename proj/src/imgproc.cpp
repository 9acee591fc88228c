#include "dlo/imgproc.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "dlo/error.hpp"
#include "dlo/simd/kernels.hpp"

namespace dlo {

ImageGrid::ImageGrid(int w, int h, int ch, float fill) : width(w), height(h), channels(ch) {
  if (w < 0 || h < 0 || ch < 1) throw Error(ErrorCode::Dimension, "invalid image shape");
  data.assign(static_cast<std::size_t>(w) * h * ch, fill);
}

std::size_t ImageGrid::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](float v) { return v != 0.0f; }));
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorCode::Config, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Config, "image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::Config, "principal point outside the image");
  }
}

Vec3 CameraIntrinsics::ray_direction(double row, double col) const {
  return pose.rotation * Vec3((col - cx) / fx, (row - cy) / fy, 1.0);
}

std::optional<CameraIntrinsics::Projection> CameraIntrinsics::project(const Vec3& p) const {
  const Vec3 pc = pose.rotation.transpose() * (p - pose.translation);
  if (!(pc.z() > 0.0)) return std::nullopt;
  return Projection{cy + fy * pc.y() / pc.z(), cx + fx * pc.x() / pc.z(), pc.z()};
}

namespace {

void require_binary_pair(const ImageGrid& mask, const ImageGrid& color) {
  if (!mask.same_shape(color)) {
    throw Error(ErrorCode::Dimension, "mask and color image sizes differ");
  }
  if (mask.channels != 1) throw Error(ErrorCode::Dimension, "mask must have one channel");
}

bool on(const ImageGrid& img, int r, int c) { return img.in_bounds(r, c) && img.at(r, c) != 0.0f; }

}  // namespace

ImageGrid blur_and_clean(const ImageGrid& mask, const ImageGrid& color) {
  require_binary_pair(mask, color);
  const int w = mask.width, h = mask.height;
  ImageGrid blurred(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int sum = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) sum += on(mask, r + dr, c + dc) ? 1 : 0;
      }
      blurred.at(r, c) = sum / 9.0 > 0.5 ? 1.0f : 0.0f;
    }
  }
  ImageGrid out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool keep = on(blurred, r, c) && on(blurred, r - 1, c) && on(blurred, r + 1, c) &&
                        on(blurred, r, c - 1) && on(blurred, r, c + 1);
      out.at(r, c) = keep ? 1.0f : 0.0f;
    }
  }
  return out;
}

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  auto lin = [](double v) {
    v /= 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double R = lin(r), G = lin(g), B = lin(b);
  const double X = (0.4124564 * R + 0.3575761 * G + 0.1804375 * B) / 0.95047;
  const double Y = (0.2126729 * R + 0.7151522 * G + 0.0721750 * B) / 1.0;
  const double Z = (0.0193339 * R + 0.1191920 * G + 0.9503041 * B) / 1.08883;
  constexpr double delta = 6.0 / 29.0;
  auto f = [&](double t) {
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
  };
  const double fx = f(X), fy = f(Y), fz = f(Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::vector<int> cluster_features(std::span<const double> features, std::size_t dims,
                                  int min_cluster_size, double cut) {
  if (dims == 0 || features.size() % dims != 0) {
    throw Error(ErrorCode::Dimension, "feature matrix size is not a multiple of dims");
  }
  if (min_cluster_size < 1) throw Error(ErrorCode::ContractViolation, "min_cluster_size < 1");
  const std::size_t n = features.size() / dims;
  if (n == 0) return {};

  // Column-major copy for the distance kernel.
  std::vector<std::vector<double>> cols(dims, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dims; ++k) cols[k][i] = features[i * dims + k];
  }
  std::vector<const double*> colp(dims);
  for (std::size_t k = 0; k < dims; ++k) colp[k] = cols[k].data();
  const auto& kern = simd::kernels();
  std::vector<double> row(n), q(dims);
  auto distances_from = [&](std::size_t i) {
    for (std::size_t k = 0; k < dims; ++k) q[k] = cols[k][i];
    kern.sq_dist_nd(q.data(), colp.data(), dims, n, row.data());
  };

  // Squared core distance: k-th nearest other point.
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(min_cluster_size), n - 1);
  std::vector<double> core2(n, 0.0);
  if (k > 0) {
    std::vector<double> tmp;
    for (std::size_t i = 0; i < n; ++i) {
      distances_from(i);
      tmp.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) tmp.push_back(row[j]);
      }
      std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(k - 1), tmp.end());
      core2[i] = tmp[k - 1];
    }
  }

  // Prim's MST on squared mutual reachability; union components of the
  // edges that survive the cut.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const double cut2 = cut * cut;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::vector<char> in_tree(n, 0);
  std::size_t cur = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    distances_from(cur);
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({row[j], core2[cur], core2[j]});
      if (w < best[j]) {
        best[j] = w;
        from[j] = cur;
      }
    }
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
    }
    in_tree[next] = 1;
    if (!(best[next] > cut2)) {
      const std::size_t a = find(next), b = find(from[next]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    cur = next;
  }

  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++size[find(i)];
  std::vector<int> label(n, -1), root_label(n, -1);
  int next_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (size[r] < static_cast<std::size_t>(min_cluster_size)) continue;
    if (root_label[r] < 0) root_label[r] = next_label++;
    label[i] = root_label[r];
  }
  return label;
}

PixelClusterSet cluster_pixels(const ImageGrid& mask, const ImageGrid& color,
                               const ClusterOptions& opt) {
  require_binary_pair(mask, color);
  if (color.channels != 3) throw Error(ErrorCode::Dimension, "color image must have 3 channels");
  const std::vector<Pixel> px = mask_pixels(mask);
  if (px.empty()) throw Error(ErrorCode::EmptyInput, "mask has no foreground pixels");

  constexpr std::size_t dims = 5;
  std::vector<double> feat(px.size() * dims);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto lab = srgb_to_lab(color.at(px[i].row, px[i].col, 0), color.at(px[i].row, px[i].col, 1),
                                 color.at(px[i].row, px[i].col, 2));
    double* f = &feat[i * dims];
    f[0] = opt.spatial_weight * px[i].row;
    f[1] = opt.spatial_weight * px[i].col;
    f[2] = lab[0];
    f[3] = lab[1];
    f[4] = lab[2];
  }
  const auto labels = cluster_features(feat, dims, opt.min_cluster_size, opt.cut);

  PixelClusterSet out;
  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  out.clusters.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (labels[i] < 0) {
      out.noise.push_back(px[i]);
    } else {
      out.clusters[static_cast<std::size_t>(labels[i])].pixels.push_back(px[i]);
    }
  }
  for (auto& cl : out.clusters) {
    std::array<double, 3> rgb{};
    double rs = 0.0, cs = 0.0;
    for (const auto& p : cl.pixels) {
      for (int ch = 0; ch < 3; ++ch) rgb[ch] += color.at(p.row, p.col, ch);
      rs += p.row;
      cs += p.col;
    }
    const double m = static_cast<double>(cl.pixels.size());
    for (auto& v : rgb) v /= m;
    cl.mean_color = rgb;
    cl.centroid = {rs / m, cs / m};
  }
  std::sort(out.clusters.begin(), out.clusters.end(), [](const auto& a, const auto& b) {
    return std::tie(a.mean_color, a.centroid) < std::tie(b.mean_color, b.centroid);
  });
  return out;
}

std::pair<std::vector<int>, int> label_components(const ImageGrid& binary) {
  const int w = binary.width, h = binary.height;
  std::vector<int> lab(static_cast<std::size_t>(w) * h, 0);
  int count = 0;
  std::vector<Pixel> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (binary.at(r, c) == 0.0f || lab[static_cast<std::size_t>(r) * w + c] != 0) continue;
      ++count;
      lab[static_cast<std::size_t>(r) * w + c] = count;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = p.row + dr, cc = p.col + dc;
            if (!on(binary, rr, cc)) continue;
            int& l = lab[static_cast<std::size_t>(rr) * w + cc];
            if (l == 0) {
              l = count;
              stack.push_back({rr, cc});
            }
          }
        }
      }
    }
  }
  return {std::move(lab), count};
}

ImageGrid skeletonize(const ImageGrid& binary) {
  if (binary.channels != 1) throw Error(ErrorCode::Dimension, "skeletonize needs one channel");
  const int w = binary.width, h = binary.height;
  ImageGrid img(w, h);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = binary.data[i] != 0.0f ? 1.0f : 0.0f;

  std::vector<Pixel> del;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      del.clear();
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          if (img.at(r, c) == 0.0f) continue;
          // P2..P9 clockwise from north.
          const int p[8] = {on(img, r - 1, c),     on(img, r - 1, c + 1), on(img, r, c + 1),
                            on(img, r + 1, c + 1), on(img, r + 1, c),     on(img, r + 1, c - 1),
                            on(img, r, c - 1),     on(img, r - 1, c - 1)};
          const int b = std::accumulate(p, p + 8, 0);
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int i = 0; i < 8; ++i) a += (p[i] == 0 && p[(i + 1) % 8] == 1) ? 1 : 0;
          if (a != 1) continue;
          const bool ok = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                    : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
          if (ok) del.push_back({r, c});
        }
      }
      for (const auto& q : del) img.at(q.row, q.col) = 0.0f;
      changed = changed || !del.empty();
    }
  }

  // Restore one pixel of any component that vanished (2x2 blocks, for example).
  const auto [lab, count] = label_components(binary);
  std::vector<char> alive(static_cast<std::size_t>(count) + 1, 0);
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (img.data[i] != 0.0f) alive[static_cast<std::size_t>(lab[i])] = 1;
  }
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] != 0 && !alive[static_cast<std::size_t>(lab[i])]) {
      img.data[i] = 1.0f;
      alive[static_cast<std::size_t>(lab[i])] = 1;
    }
  }
  return img;
}

ImageGrid pixels_to_mask(std::span<const Pixel> pixels, int width, int height) {
  ImageGrid m(width, height);
  for (const auto& p : pixels) {
    if (!m.in_bounds(p.row, p.col)) throw Error(ErrorCode::ContractViolation, "pixel out of bounds");
    m.at(p.row, p.col) = 1.0f;
  }
  return m;
}

std::vector<Pixel> mask_pixels(const ImageGrid& mask) {
  std::vector<Pixel> out;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (mask.at(r, c) != 0.0f) out.push_back({r, c});
    }
  }
  return out;
}

PointCloud pixels_to_cloud(std::span<const Pixel> pixels, const ImageGrid& depth,
                           const CameraIntrinsics& intr) {
  if (depth.channels != 1) throw Error(ErrorCode::Dimension, "depth image must have one channel");
  PointCloud cloud;
  cloud.points.reserve(pixels.size());
  for (const auto& p : pixels) {
    if (!depth.in_bounds(p.row, p.col)) {
      throw Error(ErrorCode::ContractViolation, "pixel outside the depth image");
    }
    const double z = depth.at(p.row, p.col);
    if (!(z > 0.0) || !std::isfinite(z)) continue;
    const Vec3 pc(z * (p.col - intr.cx) / intr.fx, z * (p.row - intr.cy) / intr.fy, z);
    cloud.points.push_back(intr.pose.apply(pc));
  }
  if (2 * cloud.size() < pixels.size()) {
    throw Error(ErrorCode::InsufficientDepth,
                std::to_string(cloud.size()) + " of " + std::to_string(pixels.size()) +
                    " pixels have depth");
  }
  return cloud;
}

// ---- file formats ----

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

// Reads a netpbm header ("P5"/"P6", width, height, maxval) and the single
// whitespace byte that precedes the raster.
std::pair<int, int> read_pnm_header(std::istream& in, const char* magic,
                                    const std::filesystem::path& path) {
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(ch))) {
        t.push_back(ch);
        break;
      }
    }
    while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) t.push_back(ch);
    return t;
  };
  if (token() != magic) throw Error(ErrorCode::Io, path.string() + ": expected " + magic);
  try {
    const int w = std::stoi(token());
    const int h = std::stoi(token());
    const int maxval = std::stoi(token());
    if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::Io, path.string() + ": bad header");
    return {w, h};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Io, path.string() + ": bad header");
  }
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
         std::uint32_t{b[3]} << 24;
}

constexpr char kDepthMagic[8] = {'D', 'L', 'O', 'D', 'E', 'P', 'T', 'H'};

}  // namespace

void write_pgm(const std::filesystem::path& path, const ImageGrid& mask) {
  if (mask.channels != 1) throw Error(ErrorCode::Dimension, "PGM needs one channel");
  auto out = open_out(path);
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  std::vector<char> buf(mask.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.data[i] != 0.0f ? char(255) : char(0);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ImageGrid read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto [w, h] = read_pnm_header(in, "P5", path);
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw Error(ErrorCode::Io, path.string() + ": truncated raster");
  }
  ImageGrid img(w, h);
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] != 0 ? 1.0f : 0.0f;
  return img;
}

void write_ppm(const std::filesystem::path& path, const ImageGrid& color) {
  if (color.channels != 3) throw Error(ErrorCode::Dimension, "PPM needs three channels");
  auto out = open_out(path);
  out << "P6\n" << color.width << ' ' << color.height << "\n255\n";
  std::vector<char> buf(color.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<char>(to_byte(color.data[i]));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ImageGrid read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto [w, h] = read_pnm_header(in, "P6", path);
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw Error(ErrorCode::Io, path.string() + ": truncated raster");
  }
  ImageGrid img(w, h, 3);
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
  return img;
}

void write_depth(const std::filesystem::path& path, const ImageGrid& depth) {
  if (depth.channels != 1) throw Error(ErrorCode::Dimension, "depth needs one channel");
  auto out = open_out(path);
  out.write(kDepthMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(depth.width));
  put_u32(out, static_cast<std::uint32_t>(depth.height));
  for (float v : depth.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

ImageGrid read_depth(const std::filesystem::path& path) {
  auto in = open_in(path);
  unsigned char hdr[16];
  if (!in.read(reinterpret_cast<char*>(hdr), 16) || std::memcmp(hdr, kDepthMagic, 8) != 0) {
    throw Error(ErrorCode::Io, path.string() + ": not a depth file");
  }
  const std::uint32_t w = get_u32(hdr + 8), h = get_u32(hdr + 12);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) {
    throw Error(ErrorCode::Io, path.string() + ": bad depth dimensions");
  }
  ImageGrid img(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> buf(img.data.size() * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw Error(ErrorCode::Io, path.string() + ": truncated depth data");
  }
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = std::bit_cast<float>(get_u32(&buf[4 * i]));
    if (!(img.data[i] >= 0.0f)) throw Error(ErrorCode::Io, path.string() + ": negative depth");
  }
  return img;
}

}  // namespace dlo
