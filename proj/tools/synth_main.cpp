// Writes a seeded synthetic corpus: raw 86-keypoint captures, the matching
// 17-joint poses, element-level annotations, the keypoint mapping and a
// manifest that ties them together.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "fsjump/error.hpp"
#include "fsjump/io.hpp"
#include "fsjump/synthetic.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  CLI::App app{"Generate a synthetic skating corpus", "fsjump-synth"};
  fs::path out_dir;
  fsjump::SyntheticConfig config;
  config.fps = fsjump::kFsJump3dFps;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--sequences", config.sequences)->capture_default_str();
  app.add_option("--competitions", config.competitions)->capture_default_str();
  app.add_option("--min-jumps", config.min_jumps)->capture_default_str();
  app.add_option("--max-jumps", config.max_jumps)->capture_default_str();
  app.add_option("--noise-mm", config.noise_mm)->capture_default_str();
  app.add_option("--seed", config.seed)->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    fs::create_directories(out_dir / "mocap");
    fs::create_directories(out_dir / "poses");
    fs::create_directories(out_dir / "annotations");
    const auto& rig = fsjump::JointRig::human36m();
    fsjump::write_file_atomic(out_dir / "mapping.json",
                              fsjump::synthetic_keypoint_mapping().to_json(rig).dump(2) + "\n");

    fsjump::CorpusManifest manifest;
    manifest.base_dir = out_dir;
    const auto corpus = fsjump::generate_synthetic_corpus(config);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& item = corpus[i];
      const std::string id = item.pose.meta.sequence_id;
      const auto capture = fsjump::expand_to_keypoints(item.pose, config.seed * 1000 + i);
      fsjump::write_file_atomic(out_dir / "mocap" / (id + ".json"),
                                fsjump::mocap_to_json(capture).dump() + "\n");
      fsjump::save_pose_sequence(item.pose, out_dir / "poses" / (id + ".fsps"),
                                 fsjump::PoseFormat::Binary);
      item.annotation.save(out_dir / "annotations" / (id + ".json"));
      manifest.entries.push_back({id, out_dir / "poses" / (id + ".fsps"),
                                  out_dir / "annotations" / (id + ".json"),
                                  item.pose.meta.competition_id, ""});
    }
    manifest.save(out_dir / "manifest.json");
    std::cout << "wrote " << corpus.size() << " sequences to " << out_dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
