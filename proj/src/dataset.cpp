#include "cdcnn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace fs = std::filesystem;

namespace cdcnn {

void validate_sequence(const Sequence& seq) {
  if (seq.groundtruth.size() != seq.frames.size()) {
    throw InvalidInput("sequence '" + seq.name + "': " + std::to_string(seq.frames.size()) +
                       " frames but " + std::to_string(seq.groundtruth.size()) + " ground-truth boxes");
  }
  if (seq.occluded.size() != seq.frames.size()) {
    throw InvalidInput("sequence '" + seq.name + "': occlusion flags do not match frame count");
  }
  for (std::size_t i = 0; i < seq.groundtruth.size(); ++i) {
    if (!seq.groundtruth[i].valid()) {
      throw InvalidInput("sequence '" + seq.name + "': degenerate ground truth at frame " +
                         std::to_string(i + 1));
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic generator

BBox synth_box_at(const SynthSpec& spec, int k) {
  const double scale = std::pow(spec.scale_rate, k);
  const double w = spec.target_width * scale;
  const double h = spec.target_height * scale;
  // Written so that scale_rate == 1 gives x = start_x + vx * k exactly.
  return BBox{spec.start_x + spec.velocity_x * k - (w - spec.target_width) / 2.0,
              spec.start_y + spec.velocity_y * k - (h - spec.target_height) / 2.0, w, h};
}

void validate_synth_spec(const SynthSpec& spec) {
  auto fail = [&](const std::string& why) { throw InvalidConfig("synth spec '" + spec.name + "': " + why); };
  if (spec.frames < 1) fail("frames must be >= 1");
  if (spec.frame_width < 1 || spec.frame_height < 1) fail("frame size must be positive");
  if (spec.channels != 1 && spec.channels != 3) fail("channels must be 1 or 3");
  if (!(spec.target_width > 0.0) || !(spec.target_height > 0.0)) fail("target size must be positive");
  if (!(spec.scale_rate > 0.0)) fail("scale_rate must be positive");
  if (spec.distractors < 0) fail("distractors must be >= 0");
  if (spec.noise < 0.0 || spec.appearance_drift < 0.0) fail("noise and drift must be >= 0");
  for (const auto& [a, b] : spec.occlusions) {
    if (a < 1 || b < a) fail("occlusion window must satisfy 1 <= start <= end");
  }
  for (int k = 0; k < spec.frames; ++k) {
    const BBox b = synth_box_at(spec, k);
    if (!(b.w >= 1.0 && b.h >= 1.0) || b.x < 0.0 || b.y < 0.0 || b.right() > spec.frame_width ||
        b.bottom() > spec.frame_height) {
      fail("target leaves the frame at frame " + std::to_string(k + 1));
    }
  }
}

namespace {

constexpr int kTextureCells = 6;

struct Texture {
  // kTextureCells x kTextureCells cells, `channels` values each, in [0,255].
  std::vector<double> cells;
  int channels = 1;
};

Texture random_texture(Rng& rng, int channels) {
  std::uniform_real_distribution<double> value(20.0, 235.0);
  Texture t;
  t.channels = channels;
  t.cells.resize(static_cast<std::size_t>(kTextureCells) * kTextureCells * channels);
  for (double& c : t.cells) c = value(rng);
  return t;
}

void drift_texture(Texture& t, double rate, Rng& rng) {
  if (rate <= 0.0) return;
  std::normal_distribution<double> step(0.0, rate * 255.0);
  for (double& c : t.cells) c = std::clamp(c + step(rng), 0.0, 255.0);
}

// Textured rectangle with a dark outline; pixel centres inside the box are painted.
void draw_textured(std::vector<double>& canvas, int width, int height, int channels, const BBox& box,
                   const Texture& tex) {
  const int px0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int py0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int px1 = std::min(width - 1, static_cast<int>(std::ceil(box.right())));
  const int py1 = std::min(height - 1, static_cast<int>(std::ceil(box.bottom())));
  const double border = 0.1;
  for (int py = py0; py <= py1; ++py) {
    const double v = (py + 0.5 - box.y) / box.h;
    if (v < 0.0 || v >= 1.0) continue;
    for (int px = px0; px <= px1; ++px) {
      const double u = (px + 0.5 - box.x) / box.w;
      if (u < 0.0 || u >= 1.0) continue;
      const bool edge = u < border || u >= 1.0 - border || v < border || v >= 1.0 - border;
      const int cu = std::min(kTextureCells - 1, static_cast<int>(u * kTextureCells));
      const int cv = std::min(kTextureCells - 1, static_cast<int>(v * kTextureCells));
      for (int c = 0; c < channels; ++c) {
        const double value =
            edge ? 10.0 : tex.cells[(static_cast<std::size_t>(cv) * kTextureCells + cu) * tex.channels + c];
        canvas[(static_cast<std::size_t>(py) * width + px) * channels + c] = value;
      }
    }
  }
}

void fill_box(std::vector<double>& canvas, int width, int height, int channels, const BBox& box,
              double value) {
  const auto clipped = clip_box(box, width, height);
  if (!clipped) return;
  for (int py = static_cast<int>(std::floor(clipped->y)); py < height && py < clipped->bottom(); ++py) {
    for (int px = static_cast<int>(std::floor(clipped->x)); px < width && px < clipped->right(); ++px) {
      for (int c = 0; c < channels; ++c) canvas[(static_cast<std::size_t>(py) * width + px) * channels + c] = value;
    }
  }
}

// Smooth background: coarse random grid bilinearly interpolated.
std::vector<double> make_background(const SynthSpec& spec, Rng& rng) {
  constexpr int kCell = 16;
  const int gw = spec.frame_width / kCell + 2;
  const int gh = spec.frame_height / kCell + 2;
  std::uniform_real_distribution<double> value(100.0, 156.0);
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh * spec.channels);
  for (double& g : grid) g = value(rng);
  std::vector<double> bg(static_cast<std::size_t>(spec.frame_width) * spec.frame_height * spec.channels);
  for (int y = 0; y < spec.frame_height; ++y) {
    const double gy = static_cast<double>(y) / kCell;
    const int y0 = static_cast<int>(gy);
    const double ty = gy - y0;
    for (int x = 0; x < spec.frame_width; ++x) {
      const double gx = static_cast<double>(x) / kCell;
      const int x0 = static_cast<int>(gx);
      const double tx = gx - x0;
      for (int c = 0; c < spec.channels; ++c) {
        auto g = [&](int xx, int yy) { return grid[(static_cast<std::size_t>(yy) * gw + xx) * spec.channels + c]; };
        const double top = (1 - tx) * g(x0, y0) + tx * g(x0 + 1, y0);
        const double bot = (1 - tx) * g(x0, y0 + 1) + tx * g(x0 + 1, y0 + 1);
        bg[(static_cast<std::size_t>(y) * spec.frame_width + x) * spec.channels + c] = (1 - ty) * top + ty * bot;
      }
    }
  }
  return bg;
}

struct Distractor {
  double cx, cy, vx, vy;
  Texture texture;
};

}  // namespace

Sequence generate_sequence(const SynthSpec& spec) {
  validate_synth_spec(spec);
  Rng rng(spec.seed);

  const std::vector<double> background = make_background(spec, rng);
  Texture target_tex = random_texture(rng, spec.channels);

  std::vector<Distractor> distractors;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < spec.distractors; ++i) {
    const double angle = 2.0 * std::acos(-1.0) * unit(rng);
    Distractor d{spec.target_width / 2 + unit(rng) * (spec.frame_width - spec.target_width),
                 spec.target_height / 2 + unit(rng) * (spec.frame_height - spec.target_height),
                 spec.distractor_speed * std::cos(angle), spec.distractor_speed * std::sin(angle),
                 random_texture(rng, spec.channels)};
    distractors.push_back(std::move(d));
  }

  std::normal_distribution<double> pixel_noise(0.0, 1.0);
  Sequence seq;
  seq.name = spec.name;
  for (int k = 0; k < spec.frames; ++k) {
    const int frame_no = k + 1;
    const BBox gt = synth_box_at(spec, k);
    std::vector<double> canvas = background;

    for (auto& d : distractors) {
      const double w = gt.w;
      const double h = gt.h;
      draw_textured(canvas, spec.frame_width, spec.frame_height, spec.channels,
                    box_from_center(d.cx, d.cy, w, h), d.texture);
      d.cx += d.vx;
      d.cy += d.vy;
      if (d.cx < w / 2 || d.cx > spec.frame_width - w / 2) d.vx = -d.vx;
      if (d.cy < h / 2 || d.cy > spec.frame_height - h / 2) d.vy = -d.vy;
      d.cx = std::clamp(d.cx, w / 2, spec.frame_width - w / 2);
      d.cy = std::clamp(d.cy, h / 2, spec.frame_height - h / 2);
    }

    const bool occluded = std::any_of(spec.occlusions.begin(), spec.occlusions.end(), [&](const auto& win) {
      return frame_no >= win.first && frame_no <= win.second;
    });
    draw_textured(canvas, spec.frame_width, spec.frame_height, spec.channels, gt, target_tex);
    if (occluded) {
      const BBox cover{gt.x - 0.1 * gt.w, gt.y - 0.1 * gt.h, 1.2 * gt.w, 1.2 * gt.h};
      fill_box(canvas, spec.frame_width, spec.frame_height, spec.channels, cover, 128.0);
    }

    Frame frame(spec.frame_width, spec.frame_height, spec.channels, frame_no);
    for (std::size_t i = 0; i < canvas.size(); ++i) {
      const double v = canvas[i] + (spec.noise > 0.0 ? spec.noise * pixel_noise(rng) : 0.0);
      frame.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    seq.frames.push_back(std::move(frame));
    seq.groundtruth.push_back(gt);
    seq.occluded.push_back(occluded);
    drift_texture(target_tex, spec.appearance_drift, rng);
  }
  return seq;
}

namespace {

// Picks a start point and a velocity that keep the whole trajectory inside.
SynthSpec preset_base(std::uint64_t seed, double max_speed) {
  SynthSpec spec;
  spec.seed = seed;
  Rng rng(derive_seed(seed, "preset"));
  std::uniform_real_distribution<double> speed(-max_speed, max_speed);
  spec.velocity_x = speed(rng);
  spec.velocity_y = speed(rng);
  const double travel_x = spec.velocity_x * (spec.frames - 1);
  const double travel_y = spec.velocity_y * (spec.frames - 1);
  const double margin = 4.0;
  auto start = [&](double travel, double size, double extent) {
    const double lo = margin + std::max(0.0, -travel);
    const double hi = extent - size - margin - std::max(0.0, travel);
    std::uniform_real_distribution<double> pick(lo, std::max(lo, hi));
    return std::round(pick(rng));
  };
  spec.start_x = start(travel_x, spec.target_width, spec.frame_width);
  spec.start_y = start(travel_y, spec.target_height, spec.frame_height);
  return spec;
}

}  // namespace

SynthSpec easy_spec(std::uint64_t seed) {
  SynthSpec spec = preset_base(seed, 0.9);
  spec.name = "easy-" + std::to_string(seed);
  spec.noise = 2.0;
  spec.appearance_drift = 0.0;
  spec.distractors = 0;
  return spec;
}

SynthSpec distractor_spec(std::uint64_t seed) {
  SynthSpec spec = preset_base(seed, 0.9);
  spec.name = "distractor-" + std::to_string(seed);
  spec.noise = 4.0;
  spec.appearance_drift = 0.005;
  spec.distractors = 2;
  spec.distractor_speed = 1.5;
  return spec;
}

// ---------------------------------------------------------------------------
// I/O

void write_pnm(const Frame& frame, const fs::path& path) {
  if (frame.channels != 1 && frame.channels != 3) throw InvalidInput("write_pnm: unsupported channel count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << (frame.channels == 1 ? "P5" : "P6") << '\n' << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::string next_header_token(std::istream& in, const fs::path& path) {
  std::string token;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> token;
  if (token.empty()) throw FormatError(path.string() + ": truncated PNM header");
  return token;
}

}  // namespace

Frame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  const std::string magic = next_header_token(in, path);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError(path.string() + ": unsupported PNM magic '" + magic + "'");
  }
  const auto width = parse_int(next_header_token(in, path), path.string());
  const auto height = parse_int(next_header_token(in, path), path.string());
  const auto maxval = parse_int(next_header_token(in, path), path.string());
  if (width <= 0 || height <= 0) throw FormatError(path.string() + ": bad image size");
  if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 is supported");
  in.get();  // single whitespace before raster
  Frame frame(static_cast<int>(width), static_cast<int>(height), channels);
  in.read(reinterpret_cast<char*>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(frame.pixels.size())) {
    throw FormatError(path.string() + ": truncated raster");
  }
  return frame;
}

std::vector<BBox> parse_groundtruth(const std::string& text, bool one_based) {
  std::vector<BBox> boxes;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    // OTB files mix comma, tab and space separators.
    std::string normalized = line;
    std::replace(normalized.begin(), normalized.end(), '\t', ',');
    std::replace(normalized.begin(), normalized.end(), ' ', ',');
    std::vector<std::string_view> fields;
    for (auto f : split(normalized, ',')) {
      if (!trim(f).empty()) fields.push_back(f);
    }
    const std::string ctx = "groundtruth_rect.txt line " + std::to_string(line_no);
    if (fields.size() != 4) throw FormatError(ctx + ": expected 4 fields, got " + std::to_string(fields.size()));
    BBox b{parse_double(fields[0], ctx), parse_double(fields[1], ctx), parse_double(fields[2], ctx),
           parse_double(fields[3], ctx)};
    if (one_based) {
      b.x -= 1.0;
      b.y -= 1.0;
    }
    boxes.push_back(b);
  }
  return boxes;
}

void save_sequence(const Sequence& seq, const fs::path& dir) {
  if (seq.frames.empty()) throw InvalidInput("save_sequence: empty sequence");
  validate_sequence(seq);
  std::error_code ec;
  fs::remove_all(dir / "img", ec);  // frames from an earlier save may differ in count or format
  fs::create_directories(dir / "img", ec);
  if (ec) throw IoError("cannot create directory " + (dir / "img").string() + ": " + ec.message());

  std::string gt;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Frame& f = seq.frames[i];
    std::array<char, 32> name{};
    std::snprintf(name.data(), name.size(), "%06zu.%s", i + 1, f.channels == 1 ? "pgm" : "ppm");
    write_pnm(f, dir / "img" / name.data());
    const BBox& b = seq.groundtruth[i];
    gt += format_double(b.x) + "," + format_double(b.y) + "," + format_double(b.w) + "," + format_double(b.h) + "\n";
  }
  write_text_file(dir / "groundtruth_rect.txt", gt);

  const fs::path occ_path = dir / "occlusion.txt";
  if (std::any_of(seq.occluded.begin(), seq.occluded.end(), [](bool o) { return o; })) {
    std::string occ;
    for (bool o : seq.occluded) occ += o ? "1\n" : "0\n";
    write_text_file(occ_path, occ);
  } else {
    fs::remove(occ_path, ec);
  }
}

Sequence load_sequence(const fs::path& dir, bool one_based) {
  const fs::path img_dir = dir / "img";
  if (!fs::is_directory(img_dir)) throw FormatError(dir.string() + ": missing img/ directory");

  std::vector<std::pair<long long, fs::path>> images;
  for (const auto& entry : fs::directory_iterator(img_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".pgm" && ext != ".ppm") continue;
    const auto number = parse_int(entry.path().stem().string(), entry.path().string());
    images.emplace_back(number, entry.path());
  }
  std::sort(images.begin(), images.end());

  Sequence seq;
  seq.name = dir.filename().string();
  if (seq.name.empty()) seq.name = dir.parent_path().filename().string();
  seq.groundtruth = parse_groundtruth(read_text_file(dir / "groundtruth_rect.txt"), one_based);
  if (seq.groundtruth.size() != images.size()) {
    throw FormatError(dir.string() + ": " + std::to_string(images.size()) + " frames but " +
                      std::to_string(seq.groundtruth.size()) + " ground-truth lines");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    Frame f = read_pnm(images[i].second);
    f.index = static_cast<int>(i + 1);
    seq.frames.push_back(std::move(f));
  }

  seq.occluded.assign(seq.frames.size(), false);
  const fs::path occ_path = dir / "occlusion.txt";
  if (fs::exists(occ_path)) {
    std::istringstream in(read_text_file(occ_path));
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      if (i >= seq.occluded.size()) throw FormatError(occ_path.string() + ": more lines than frames");
      seq.occluded[i++] = parse_int(line, occ_path.string()) != 0;
    }
  }
  validate_sequence(seq);
  return seq;
}

}  // namespace cdcnn
