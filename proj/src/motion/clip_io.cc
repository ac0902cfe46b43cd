#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "locolab/errors.h"
#include "locolab/motion/motion.h"

namespace locolab::motion {

namespace {

// Per-frame columns, in file order.
std::vector<std::string> ColumnNames() {
  std::vector<std::string> names = {"base_height", "base_pitch",
                                    "base_forward_vel", "base_vertical_vel",
                                    "base_pitch_rate"};
  for (int j = 0; j < sim::kNumJoints; ++j) names.push_back("q" + std::to_string(j));
  for (int j = 0; j < sim::kNumJoints; ++j) names.push_back("dq" + std::to_string(j));
  for (int leg = 0; leg < sim::kNumLegs; ++leg) {
    names.push_back("foot" + std::to_string(leg) + "_x");
    names.push_back("foot" + std::to_string(leg) + "_z");
  }
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    names.push_back("contact" + std::to_string(leg));
  return names;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> Split(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next non-empty, non-comment line split into tokens; empty at the end.
  std::vector<std::string> Next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      const auto tokens = Split(line);
      if (tokens.empty() || tokens[0][0] == '#') continue;
      return tokens;
    }
    ++line_;
    return {};
  }
  int line() const { return line_; }

 private:
  std::istringstream in_;
  int line_ = 0;
};

double ParseDouble(const std::string& token, int line, const std::string& field) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(line, field, "expected a number, got '" + token + "'");
  return value;
}

long ParseInt(const std::string& token, int line, const std::string& field) {
  long value = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(line, field, "expected an integer, got '" + token + "'");
  return value;
}

// Reads "key v1 v2 ..." with exactly `count` values.
std::vector<std::string> ExpectKey(LineReader& reader, const std::string& key,
                                   std::size_t count) {
  auto tokens = reader.Next();
  if (tokens.empty())
    throw ParseError(reader.line(), key, "unexpected end of file");
  if (tokens[0] != key)
    throw ParseError(reader.line(), key,
                     "expected '" + key + "', found '" + tokens[0] + "'");
  if (tokens.size() != count + 1)
    throw ParseError(reader.line(), key,
                     "expected " + std::to_string(count) + " value(s)");
  tokens.erase(tokens.begin());
  return tokens;
}

}  // namespace

std::string ClipToString(const MotionClip& clip) {
  std::ostringstream out;
  out << "# locolab motion clip; lengths in m, angles in rad, time in s\n";
  out << "schema_version " << kClipSchemaVersion << "\n";
  out << "gait " << ToString(clip.gait_label) << "\n";
  out << "source " << ToString(clip.source) << "\n";
  out << "mirrored " << (clip.mirrored ? 1 : 0) << "\n";
  out << "frame_rate " << Num(clip.frame_rate) << "\n";
  out << "source_leg_length " << Num(clip.source_leg_length) << "\n";
  out << "source_hip_x";
  for (double x : clip.source_hip_x) out << ' ' << Num(x);
  out << "\nframes " << clip.frames.size() << "\ncolumns";
  for (const auto& name : ColumnNames()) out << ' ' << name;
  out << '\n';
  for (const ReferencePose& p : clip.frames) {
    out << Num(p.base_height) << ' ' << Num(p.base_pitch) << ' '
        << Num(p.base_forward_vel) << ' ' << Num(p.base_vertical_vel) << ' '
        << Num(p.base_pitch_rate);
    for (int j = 0; j < sim::kNumJoints; ++j) out << ' ' << Num(p.joint_angles[j]);
    for (int j = 0; j < sim::kNumJoints; ++j) out << ' ' << Num(p.joint_vels[j]);
    for (const auto& f : p.foot_positions_body)
      out << ' ' << Num(f.x()) << ' ' << Num(f.y());
    for (bool c : p.foot_contact) out << ' ' << (c ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

MotionClip ClipFromString(const std::string& text) {
  LineReader reader(text);
  MotionClip clip;
  {
    const auto v = ExpectKey(reader, "schema_version", 1);
    const int line = reader.line();
    const long version = ParseInt(v[0], line, "schema_version");
    if (version != kClipSchemaVersion)
      throw SchemaVersionMismatch("clip schema_version " + v[0] +
                                  " is not supported (expected " +
                                  std::to_string(kClipSchemaVersion) + ")");
  }
  try {
    clip.gait_label = GaitLabelFromString(ExpectKey(reader, "gait", 1)[0]);
    clip.source = ClipSourceFromString(ExpectKey(reader, "source", 1)[0]);
  } catch (const ConfigError& e) {
    throw ParseError(reader.line(), "gait/source", e.what());
  }
  auto scalar = [&reader](const std::string& key) {
    const std::string token = ExpectKey(reader, key, 1)[0];
    return ParseDouble(token, reader.line(), key);
  };
  auto integer = [&reader](const std::string& key) {
    const std::string token = ExpectKey(reader, key, 1)[0];
    return ParseInt(token, reader.line(), key);
  };
  const long mirrored = integer("mirrored");
  if (mirrored != 0 && mirrored != 1)
    throw ParseError(reader.line(), "mirrored", "expected 0 or 1");
  clip.mirrored = mirrored == 1;
  clip.frame_rate = scalar("frame_rate");
  clip.source_leg_length = scalar("source_leg_length");
  const auto hips = ExpectKey(reader, "source_hip_x", sim::kNumLegs);
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    clip.source_hip_x[leg] = ParseDouble(hips[leg], reader.line(), "source_hip_x");
  const long n = integer("frames");
  if (n < 2) throw ParseError(reader.line(), "frames", "need at least 2 frames");
  const auto names = ColumnNames();
  const auto columns = ExpectKey(reader, "columns", names.size());
  for (std::size_t c = 0; c < names.size(); ++c)
    if (columns[c] != names[c])
      throw ParseError(reader.line(), "columns",
                       "column " + std::to_string(c) + " should be '" +
                           names[c] + "'");
  clip.frames.resize(n);
  for (long i = 0; i < n; ++i) {
    const auto tokens = reader.Next();
    if (tokens.empty())
      throw ParseError(reader.line(), "frames",
                       "file ends after " + std::to_string(i) + " of " +
                           std::to_string(n) + " frames");
    if (tokens.size() != names.size())
      throw ParseError(reader.line(), "frames",
                       "expected " + std::to_string(names.size()) +
                           " columns, found " + std::to_string(tokens.size()));
    std::size_t c = 0;
    auto next = [&]() {
      const double v = ParseDouble(tokens[c], reader.line(), names[c]);
      ++c;
      return v;
    };
    ReferencePose& p = clip.frames[i];
    p.base_height = next();
    p.base_pitch = next();
    p.base_forward_vel = next();
    p.base_vertical_vel = next();
    p.base_pitch_rate = next();
    for (int j = 0; j < sim::kNumJoints; ++j) p.joint_angles[j] = next();
    for (int j = 0; j < sim::kNumJoints; ++j) p.joint_vels[j] = next();
    for (auto& f : p.foot_positions_body) {
      f.x() = next();
      f.y() = next();
    }
    for (bool& contact : p.foot_contact) {
      const std::string& token = tokens[c];
      if (token != "0" && token != "1")
        throw ParseError(reader.line(), names[c], "expected 0 or 1");
      contact = token == "1";
      ++c;
    }
  }
  if (!reader.Next().empty())
    throw ParseError(reader.line(), "frames", "unexpected trailing data");
  try {
    clip.Validate();
  } catch (const ConfigError& e) {
    throw ParseError(0, "clip", e.what());
  }
  return clip;
}

void SaveClip(const MotionClip& clip, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << ClipToString(clip);
  if (!out) throw IoError("failed writing '" + path + "'");
}

MotionClip LoadClip(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open clip '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ClipFromString(buffer.str());
}

}  // namespace locolab::motion
