#include "pvd/dataset.hpp"

#include "pvd/image.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace pvd {

namespace {

constexpr std::array<const char*, 4> kTagNames{"first_annotation", "human_reaction", "direct_sight",
                                               "production_detection"};

std::optional<int>* tag_slot(SequenceTags& t, const std::string& name) {
    if (name == "first_annotation") return &t.first_annotation;
    if (name == "human_reaction") return &t.human_reaction;
    if (name == "direct_sight") return &t.direct_sight;
    if (name == "production_detection") return &t.production_detection;
    return nullptr;
}

const std::optional<int>& tag_slot(const SequenceTags& t, std::size_t i) {
    switch (i) {
        case 0: return t.first_annotation;
        case 1: return t.human_reaction;
        case 2: return t.direct_sight;
        default: return t.production_detection;
    }
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError(p.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError(p.string() + ": cannot open for writing");
    out << text;
}

int parse_int_token(const std::string& tok, const std::string& where) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InputError(where + ": expected an integer, got '" + tok + "'");
    }
}

// Width and height from a PGM header, without reading pixels.
std::pair<int, int> pgm_size(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError(p.string() + ": cannot open");
    std::string magic;
    int w = 0, h = 0;
    in >> magic;
    while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
    in >> w;
    while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
    in >> h;
    if (magic != "P5" || w <= 0 || h <= 0) throw InputError(p.string() + ": not a binary PGM");
    return {w, h};
}

std::vector<std::string> read_manifest(const fs::path& p) {
    std::istringstream in(read_text(p));
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string id;
        if (ss >> id && id[0] != '#') ids.push_back(id);
    }
    return ids;
}

}  // namespace

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    for (Split sp : kAllSplits)
        if (s == to_string(sp)) return sp;
    throw InputError("unknown split '" + s + "' (train, val, test)");
}

std::optional<std::size_t> Sequence::position_of(int frame_index) const {
    const auto it = std::lower_bound(frames.begin(), frames.end(), frame_index,
                                     [](const FrameAnnotation& f, int v) { return f.index < v; });
    if (it == frames.end() || it->index != frame_index) return std::nullopt;
    return static_cast<std::size_t>(it - frames.begin());
}

const Sequence* Dataset::find(const std::string& id) const {
    for (const Sequence& s : sequences)
        if (s.id == id) return &s;
    return nullptr;
}

std::vector<const Sequence*> Dataset::split(Split s) const {
    std::vector<const Sequence*> out;
    for (const std::string& id : splits[static_cast<std::size_t>(s)])
        if (const Sequence* seq = find(id)) out.push_back(seq);
    return out;
}

std::string annotation_filename(int frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06d.txt", frame_index);
    return buf;
}

std::string format_annotation(const FrameAnnotation& a) {
    std::ostringstream out;
    out << "frame " << a.index << '\n' << "image " << a.image << '\n';
    if (a.depth) out << "depth " << *a.depth << '\n';
    for (const Keypoint& k : a.keypoints)
        out << "keypoint " << k.x << ' ' << k.y << ' ' << k.vehicle_id << ' ' << to_string(k.kind) << '\n';
    return out.str();
}

FrameAnnotation parse_annotation(const std::string& text, const std::string& origin) {
    FrameAnnotation a;
    bool has_frame = false, has_image = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key) || key[0] == '#') continue;
        std::vector<std::string> toks;
        for (std::string t; ss >> t;) toks.push_back(t);
        const auto need = [&](std::size_t n) {
            if (toks.size() != n) throw InputError(where + ": '" + key + "' expects " + std::to_string(n) + " fields");
        };
        if (key == "frame") {
            need(1);
            a.index = parse_int_token(toks[0], where);
            has_frame = true;
        } else if (key == "image") {
            need(1);
            a.image = toks[0];
            has_image = true;
        } else if (key == "depth") {
            need(1);
            a.depth = toks[0];
        } else if (key == "keypoint") {
            need(4);
            Keypoint k;
            k.x = parse_int_token(toks[0], where);
            k.y = parse_int_token(toks[1], where);
            k.vehicle_id = parse_int_token(toks[2], where);
            try {
                k.kind = parse_light_kind(toks[3]);
            } catch (const InputError& e) {
                throw InputError(where + ": " + e.what());
            }
            a.keypoints.push_back(k);
        } else {
            throw InputError(where + ": unknown field '" + key + "'");
        }
    }
    if (!has_frame || !has_image) throw InputError(origin + ": annotation needs 'frame' and 'image' fields");
    return a;
}

std::string format_tags(const SequenceTags& tags) {
    std::ostringstream out;
    for (std::size_t i = 0; i < kTagNames.size(); ++i) {
        const auto& v = tag_slot(tags, i);
        out << kTagNames[i] << ' ';
        if (v) out << *v;
        else out << "none";
        out << '\n';
    }
    return out.str();
}

SequenceTags parse_tags(const std::string& text, const std::string& origin) {
    SequenceTags tags;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        std::istringstream ss(line);
        std::string key, value;
        if (!(ss >> key) || key[0] == '#') continue;
        if (!(ss >> value)) throw InputError(where + ": tag '" + key + "' has no value");
        auto* slot = tag_slot(tags, key);
        if (!slot) throw InputError(where + ": unknown tag '" + key + "'");
        if (value != "none") *slot = parse_int_token(value, where);
    }
    return tags;
}

Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw InputError(root.string() + ": not a directory");
    Dataset ds;
    ds.root = root;

    std::vector<std::string> missing;
    for (Split s : kAllSplits)
        if (!fs::is_regular_file(root / "splits" / (std::string(to_string(s)) + ".txt")))
            missing.push_back("splits/" + std::string(to_string(s)) + ".txt");
    if (!missing.empty()) {
        std::string msg = root.string() + ": missing split manifests:";
        for (const auto& m : missing) msg += " " + m;
        throw InputError(msg);
    }

    if (fs::is_regular_file(root / "camera.txt")) ds.camera = read_camera((root / "camera.txt").string());

    std::vector<std::string> ids;
    for (Split s : kAllSplits) {
        const fs::path manifest = root / "splits" / (std::string(to_string(s)) + ".txt");
        ds.splits[static_cast<std::size_t>(s)] = read_manifest(manifest);
        for (const auto& id : ds.splits[static_cast<std::size_t>(s)]) {
            if (!fs::is_directory(root / "sequences" / id))
                throw InputError(manifest.string() + ": sequence '" + id + "' has no directory");
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        }
    }

    for (const std::string& id : ids) {
        Sequence seq;
        seq.id = id;
        seq.dir = root / "sequences" / id;
        const fs::path ann_dir = seq.dir / "annotations";
        std::vector<fs::path> files;
        if (fs::is_directory(ann_dir))
            for (const auto& entry : fs::directory_iterator(ann_dir))
                if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            FrameAnnotation a = parse_annotation(read_text(f), f.string());
            const fs::path image = seq.dir / a.image;
            const auto [w, h] = pgm_size(image);
            for (const Keypoint& k : a.keypoints)
                if (k.x < 0 || k.y < 0 || k.x >= w || k.y >= h)
                    throw InputError(f.string() + ": keypoint (" + std::to_string(k.x) + ", " + std::to_string(k.y) +
                                     ") outside the " + std::to_string(w) + "x" + std::to_string(h) + " image");
            seq.frames.push_back(std::move(a));
        }
        std::sort(seq.frames.begin(), seq.frames.end(),
                  [](const FrameAnnotation& a, const FrameAnnotation& b) { return a.index < b.index; });
        for (std::size_t i = 1; i < seq.frames.size(); ++i)
            if (seq.frames[i].index == seq.frames[i - 1].index)
                throw InputError(ann_dir.string() + ": duplicate frame index " + std::to_string(seq.frames[i].index));

        const fs::path tags_file = seq.dir / "tags.txt";
        if (fs::is_regular_file(tags_file)) {
            seq.tags = parse_tags(read_text(tags_file), tags_file.string());
            for (std::size_t i = 0; i < kTagNames.size(); ++i)
                if (const auto& v = tag_slot(seq.tags, i); v && !seq.position_of(*v))
                    throw InputError(tags_file.string() + ": tag " + kTagNames[i] + " references missing frame " +
                                     std::to_string(*v));
            if (seq.tags.first_annotation && seq.tags.direct_sight &&
                *seq.tags.first_annotation > *seq.tags.direct_sight)
                throw InputError(tags_file.string() + ": first_annotation is after direct_sight");
        }
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
    for (Split s : kAllSplits) {
        std::string text;
        for (const auto& id : dataset.splits[static_cast<std::size_t>(s)]) text += id + "\n";
        write_text(root / "splits" / (std::string(to_string(s)) + ".txt"), text);
    }
    if (dataset.camera) {
        fs::create_directories(root);
        write_camera((root / "camera.txt").string(), *dataset.camera);
    }
    for (const Sequence& seq : dataset.sequences) {
        const fs::path dir = root / "sequences" / seq.id;
        write_text(dir / "tags.txt", format_tags(seq.tags));
        for (const FrameAnnotation& f : seq.frames)
            write_text(dir / "annotations" / annotation_filename(f.index), format_annotation(f));
    }
}

}  // namespace pvd
