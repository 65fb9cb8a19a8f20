#include "pmap/io.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace pmap {

namespace {

using nlohmann::json;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

static_assert(std::endian::native == std::endian::little,
              "tensor i/o assumes a little-endian host");

}  // namespace

ProbabilityStack read_stack(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4) throw TruncatedPayload(path.string() + ": no header");
  if (std::memcmp(bytes.data(), "PMAP", 4) != 0) {
    throw BadMagic(path.string() + ": bad magic");
  }
  if (bytes.size() < 16) throw TruncatedPayload(path.string() + ": short header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint16_t version = get_u16(p + 4);
  if (version != kTensorVersion) {
    throw VersionUnsupported(path.string() + ": version " + std::to_string(version));
  }
  const std::uint16_t n_maps = get_u16(p + 6);
  const std::uint32_t height = get_u32(p + 8);
  const std::uint32_t width = get_u32(p + 12);
  if (n_maps == 0 || height == 0 || width == 0) {
    throw IoError(path.string() + ": empty tensor dimensions");
  }
  const std::size_t expected =
      16 + static_cast<std::size_t>(n_maps) * height * width * sizeof(float);
  if (bytes.size() < expected) {
    throw TruncatedPayload(path.string() + ": payload shorter than header claims");
  }
  if (bytes.size() > expected) {
    throw IoError(path.string() + ": trailing bytes after the payload");
  }

  const Grid grid(static_cast<int>(width), static_cast<int>(height));
  ProbabilityStack stack;
  stack.maps.reserve(n_maps);
  const char* cursor = bytes.data() + 16;
  for (int m = 0; m < n_maps; ++m) {
    ProbabilityMap map{grid, 0.0, Array2d(grid.height, grid.width)};
    double* out = map.values.data();
    for (Index i = 0; i < grid.size(); ++i) {
      float v;
      std::memcpy(&v, cursor, sizeof(float));
      cursor += sizeof(float);
      if (!std::isfinite(v)) {
        throw NonFiniteValue(path.string() + ": non-finite value in map " +
                             std::to_string(m));
      }
      if (v < -1e-6f || v > 1.0f + 1e-6f) {
        throw ValueOutOfRange(path.string() + ": value " + std::to_string(v) +
                              " outside [0,1] in map " + std::to_string(m));
      }
      out[i] = std::clamp(static_cast<double>(v), 0.0, 1.0);
    }
    stack.maps.push_back(std::move(map));
  }
  return stack;
}

void write_stack(const ProbabilityStack& stack, const std::filesystem::path& path) {
  if (stack.empty()) throw IoError("write_stack: empty stack");
  const Grid grid = stack.grid();

  std::string bytes;
  bytes.reserve(16 + static_cast<std::size_t>(stack.count()) * grid.size() *
                         sizeof(float));
  bytes.append("PMAP", 4);
  put_u16(bytes, kTensorVersion);
  put_u16(bytes, static_cast<std::uint16_t>(stack.count()));
  put_u32(bytes, static_cast<std::uint32_t>(grid.height));
  put_u32(bytes, static_cast<std::uint32_t>(grid.width));

  for (const ProbabilityMap& map : stack.maps) {
    if (map.grid != grid) throw ShapeMismatch("write_stack: inconsistent grids");
    const double* v = map.values.data();
    for (Index i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(v[i])) throw NonFiniteValue("write_stack: non-finite value");
      const float f = static_cast<float>(v[i]);
      char raw[sizeof(float)];
      std::memcpy(raw, &f, sizeof(float));
      bytes.append(raw, sizeof(float));
    }
  }
  write_file(path, bytes);
}

void attach_alphas(ProbabilityStack& stack, const AlphaSchedule& schedule) {
  if (stack.count() != schedule.count()) {
    throw ShapeMismatch("attach_alphas: map count does not match schedule");
  }
  for (int i = 0; i < stack.count(); ++i) {
    stack.maps[i].alpha = schedule.alphas[i];
  }
}

namespace {

// Compact viridis anchors, linearly interpolated.
constexpr unsigned char kViridis[16][3] = {
    {68, 1, 84},    {72, 26, 108},  {71, 47, 125},  {65, 68, 135},
    {57, 86, 140},  {49, 104, 142}, {42, 120, 142}, {35, 136, 142},
    {31, 152, 139}, {34, 168, 132}, {53, 183, 121}, {84, 197, 104},
    {122, 209, 81}, {165, 219, 54}, {210, 226, 27}, {253, 231, 37}};

void jet_rgb(double t, unsigned char rgb[3]) {
  auto channel = [&](double center) {
    const double v = 1.5 - std::abs(4.0 * t - center);
    return static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  };
  rgb[0] = channel(3.0);
  rgb[1] = channel(2.0);
  rgb[2] = channel(1.0);
}

void viridis_rgb(double t, unsigned char rgb[3]) {
  const double x = std::clamp(t, 0.0, 1.0) * 15.0;
  const int lo = std::min(14, static_cast<int>(x));
  const double f = x - lo;
  for (int c = 0; c < 3; ++c) {
    const double v = kViridis[lo][c] + f * (kViridis[lo + 1][c] - kViridis[lo][c]);
    rgb[c] = static_cast<unsigned char>(v + 0.5);
  }
}

}  // namespace

Colormap parse_colormap(const std::string& name) {
  if (name == "gray") return Colormap::gray;
  if (name == "viridis") return Colormap::viridis;
  if (name == "jet") return Colormap::jet;
  throw Error("unknown colormap: " + name);
}

void export_heatmap(const ProbabilityMap& map, const std::filesystem::path& path,
                    Colormap colormap) {
  const Grid& grid = map.grid;
  if (grid.empty()) throw IoError("export_heatmap: empty map");
  std::string bytes;
  const std::string dims =
      std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
  const double* v = map.values.data();
  if (colormap == Colormap::gray) {
    bytes = "P5\n" + dims;
    bytes.reserve(bytes.size() + grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
      bytes.push_back(static_cast<char>(
          std::clamp(v[i], 0.0, 1.0) * 255.0 + 0.5));
    }
  } else {
    bytes = "P6\n" + dims;
    bytes.reserve(bytes.size() + 3 * grid.size());
    unsigned char rgb[3];
    for (Index i = 0; i < grid.size(); ++i) {
      const double t = std::clamp(v[i], 0.0, 1.0);
      colormap == Colormap::jet ? jet_rgb(t, rgb) : viridis_rgb(t, rgb);
      bytes.append(reinterpret_cast<const char*>(rgb), 3);
    }
  }
  write_file(path, bytes);
}

void export_heatmap(const ProbabilityStack& stack,
                    const std::filesystem::path& path, Colormap colormap) {
  const std::string stem = path.stem().string();
  const std::string ext =
      path.extension().empty() ? (colormap == Colormap::gray ? ".pgm" : ".ppm")
                               : path.extension().string();
  for (int i = 0; i < stack.count(); ++i) {
    std::filesystem::path p = path;
    p.replace_filename(stem + "_m" + std::to_string(i) + ext);
    export_heatmap(stack.maps[i], p, colormap);
  }
}

namespace {

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return j;
}

Grid grid_from_json(const json& image, const std::string& context) {
  if (!image.contains("width") || !image.contains("height")) {
    throw IoError(context + ": image needs width and height");
  }
  return Grid(image["width"].get<int>(), image["height"].get<int>());
}

std::vector<Vec2> points_from_json(const json& pts, const std::string& context) {
  std::vector<Vec2> vertices;
  for (const auto& p : pts) {
    if (!p.is_array() || p.size() != 2) {
      throw IoError(context + ": each point must be [x, y]");
    }
    vertices.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return vertices;
}

json points_to_json(const std::vector<Vec2>& vertices) {
  json pts = json::array();
  for (const Vec2& v : vertices) pts.push_back({v.x(), v.y()});
  return pts;
}

}  // namespace

ImageAnnotations read_annotations(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.contains("image") || !j.contains("instances")) {
    throw IoError(path.string() + ": annotations need 'image' and 'instances'");
  }
  ImageAnnotations out;
  out.grid = grid_from_json(j["image"], path.string());
  out.image = j["image"].value("id", path.stem().string());
  for (const auto& inst : j["instances"]) {
    if (!inst.contains("points")) {
      throw IoError(path.string() + ": instance needs 'points'");
    }
    try {
      out.instances.push_back(
          make_polygon(points_from_json(inst["points"], path.string()),
                       inst.value("id", ""), inst.value("ignore", false)));
    } catch (const DegeneratePolygon& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_annotations(const ImageAnnotations& annotations,
                       const std::filesystem::path& path) {
  json j;
  j["image"] = {{"width", annotations.grid.width},
                {"height", annotations.grid.height},
                {"id", annotations.image}};
  json insts = json::array();
  for (const TextPolygon& poly : annotations.instances) {
    insts.push_back({{"id", poly.id},
                     {"ignore", poly.ignore},
                     {"points", points_to_json(poly.vertices)}});
  }
  j["instances"] = std::move(insts);
  write_file(path, j.dump(2) + "\n");
}

ImageDetections read_detections(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.contains("image") || !j.contains("detections")) {
    throw IoError(path.string() + ": detections need 'image' and 'detections'");
  }
  ImageDetections out;
  out.grid = grid_from_json(j["image"], path.string());
  out.image = j["image"].value("id", path.stem().string());
  for (const auto& det : j["detections"]) {
    if (!det.contains("points") || !det.contains("score")) {
      throw IoError(path.string() + ": detection needs 'points' and 'score'");
    }
    DetectionBoundary boundary;
    try {
      boundary.polygon =
          make_polygon(points_from_json(det["points"], path.string()));
    } catch (const DegeneratePolygon& e) {
      throw IoError(path.string() + ": " + e.what());
    }
    boundary.score = det["score"].get<double>();
    boundary.mode = parse_boundary_mode(det.value("mode", "polygon"));
    out.detections.push_back(std::move(boundary));
  }
  return out;
}

namespace {

json detections_json(const ImageDetections& detections) {
  json j;
  j["image"] = {{"width", detections.grid.width},
                {"height", detections.grid.height},
                {"id", detections.image}};
  json dets = json::array();
  for (const DetectionBoundary& det : detections.detections) {
    dets.push_back({{"points", points_to_json(det.polygon.vertices)},
                    {"score", det.score},
                    {"mode", to_string(det.mode)}});
  }
  j["detections"] = std::move(dets);
  return j;
}

}  // namespace

void write_detections(const ImageDetections& detections,
                      const std::filesystem::path& path) {
  write_file(path, detections_json(detections).dump(2) + "\n");
}

std::string detections_to_json(const ImageDetections& detections) {
  return detections_json(detections).dump(2);
}

namespace {

template <class Reader>
auto read_set(const std::filesystem::path& path, Reader reader)
    -> std::vector<decltype(reader(path))> {
  std::vector<decltype(reader(path))> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(reader(f));
  } else {
    out.push_back(reader(path));
  }
  return out;
}

}  // namespace

std::vector<ImageAnnotations> read_annotation_set(const std::filesystem::path& path) {
  return read_set(path, [](const std::filesystem::path& p) {
    return read_annotations(p);
  });
}

std::vector<ImageDetections> read_detection_set(const std::filesystem::path& path) {
  return read_set(path, [](const std::filesystem::path& p) {
    return read_detections(p);
  });
}

AlphaSchedule PipelineConfig::schedule() const {
  return weights.empty() ? make_schedule(k, n) : make_schedule(k, n, weights);
}

FilterConfig PipelineConfig::filter_config() const {
  FilterConfig fc;
  fc.th_b = th_b;
  fc.th_e = th_e;
  fc.min_area = min_area;
  fc.mode = filter;
  return fc;
}

std::vector<std::string> preset_names() {
  return {"totaltext", "ctw1500", "td500", "mlt", "icdar15"};
}

void apply_preset(PipelineConfig& cfg, const std::string& name) {
  const bool voting = cfg.filter == FilterMode::voting;
  if (name == "totaltext") {
    cfg.th_b = voting ? 0.325 : 0.3;
    cfg.th_e = 0.65;
    cfg.boundary = BoundaryMode::polygon;
  } else if (name == "ctw1500") {
    cfg.th_b = voting ? 0.365 : 0.3;
    cfg.th_e = 0.65;
    cfg.boundary = BoundaryMode::polygon;
  } else if (name == "td500") {
    cfg.th_b = 0.305;
    cfg.th_e = 0.8;
    cfg.boundary = BoundaryMode::rect;
  } else if (name == "mlt") {
    cfg.th_b = voting ? 0.345 : 0.405;
    cfg.th_e = 0.8;
    cfg.boundary = BoundaryMode::rect;
  } else if (name == "icdar15") {
    cfg.th_b = voting ? 0.335 : 0.405;
    cfg.th_e = 0.84;
    cfg.boundary = BoundaryMode::rect;
  } else {
    throw Error("unknown preset: " + name);
  }
}

void load_config(PipelineConfig& cfg, const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  for (const auto& [key, value] : j.items()) {
    if (key == "k") {
      cfg.k = value.get<int>();
    } else if (key == "n") {
      cfg.n = value.get<int>();
    } else if (key == "weights") {
      cfg.weights = value.get<std::vector<double>>();
    } else if (key == "lambdas") {
      cfg.lambdas = value.get<std::vector<double>>();
    } else if (key == "gamma") {
      cfg.gamma = value.get<double>();
    } else if (key == "th_b") {
      cfg.th_b = value.get<double>();
    } else if (key == "th_e") {
      cfg.th_e = value.get<double>();
    } else if (key == "min_area") {
      cfg.min_area = value.get<Index>();
    } else if (key == "grow") {
      cfg.grow = parse_growth_algorithm(value.get<std::string>());
    } else if (key == "filter") {
      cfg.filter = parse_filter_mode(value.get<std::string>());
    } else if (key == "boundary") {
      cfg.boundary = parse_boundary_mode(value.get<std::string>());
    } else if (key == "simplify_eps") {
      cfg.simplify_eps = value.get<double>();
    } else if (key == "iou") {
      cfg.iou_threshold = value.get<double>();
    } else if (key == "preset") {
      apply_preset(cfg, value.get<std::string>());
    } else {
      throw IoError(path.string() + ": unknown config key '" + key + "'");
    }
  }
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PMAP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void run_parallel(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const int workers =
      std::min<std::size_t>(resolve_thread_count(threads), std::max<std::size_t>(count, 1));
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pmap
