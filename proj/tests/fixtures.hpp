#pragma once

#include "pvd/dataset.hpp"
#include "pvd/synth.hpp"

#include <filesystem>
#include <string>

namespace fixture {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / "pvd_tests" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Small fast approach scene used for tuning: 320x240, vehicle from 150 m at 3 m/frame.
inline pvd::SyntheticSceneSpec small_scene() {
    pvd::SyntheticSceneSpec spec;
    spec.camera = pvd::SyntheticSceneSpec::default_camera(320, 240);
    spec.frames = 40;
    spec.start_distance = 150.0;
    spec.speed = 3.0;
    spec.direct_sight_frame = 16;
    spec.indirect_lead = 10;
    spec.seed = 5;
    return spec;
}

/// Three sequences, one per split, rendered once per process.
inline const pvd::Dataset& tuning_dataset() {
    static const pvd::Dataset ds = [] {
        const auto root = temp_dir("tuning_dataset");
        pvd::write_synthetic_dataset(root, small_scene(), 3, false);
        return pvd::load_dataset(root);
    }();
    return ds;
}

}  // namespace fixture
