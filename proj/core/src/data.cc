// core/src/data.cc

// Copyright 2026  The svtk Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "svtk/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "svtk/binary-io.h"
#include "svtk/rng.h"

namespace svtk {

namespace fs = std::filesystem;

void FrameMatrix::Validate() const {
  if (frames.rows() < 1 || frames.cols() < 1)
    throw InvalidArgument("utterance '" + utterance_id +
                          "': feature matrix must have L >= 1 and F >= 1");
  if (!frames.allFinite())
    throw InvalidArgument("utterance '" + utterance_id +
                          "': non-finite feature value");
}

FrameMatrix LoadFeatures(const std::string &path,
                         const std::string &utterance_id) {
  BinaryReader reader(path, "SVF1");
  if (reader.Remaining() < 8) throw FormatError(path + ": truncated header");
  const std::uint32_t num_frames = reader.ReadU32();
  const std::uint32_t dim = reader.ReadU32();
  if (num_frames == 0 || dim == 0)
    throw FormatError(path + ": header declares an empty matrix");
  const std::uint64_t expected = std::uint64_t{num_frames} * dim * 4;
  if (reader.Remaining() != expected) {
    std::ostringstream msg;
    msg << path << ": payload size mismatch (header " << num_frames << "x"
        << dim << " needs " << expected << " bytes, found "
        << reader.Remaining() << ")";
    throw FormatError(msg.str());
  }
  FrameMatrix out;
  out.utterance_id = utterance_id;
  out.frames.resize(num_frames, dim);
  for (std::uint32_t l = 0; l < num_frames; ++l) {
    for (std::uint32_t d = 0; d < dim; ++d) {
      const float v = reader.ReadF32();
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << path << ": non-finite value at frame " << l << ", dim " << d;
        throw FormatError(msg.str());
      }
      out.frames(l, d) = v;
    }
  }
  return out;
}

void SaveFeatures(const std::string &path, const FrameMatrix &features) {
  features.Validate();
  BinaryWriter writer(path, "SVF1");
  writer.WriteU32(static_cast<std::uint32_t>(features.NumFrames()));
  writer.WriteU32(static_cast<std::uint32_t>(features.Dim()));
  for (Eigen::Index l = 0; l < features.NumFrames(); ++l)
    for (Eigen::Index d = 0; d < features.Dim(); ++d)
      writer.WriteF32(static_cast<float>(features.frames(l, d)));
  writer.Close();
}

FrameMatrix StackContext(const FrameMatrix &features, int half_window) {
  if (half_window < 0) throw InvalidArgument("half_window must be >= 0");
  const Eigen::Index num_frames = features.NumFrames();
  const Eigen::Index dim = features.Dim();
  const Eigen::Index width = 2 * half_window + 1;
  FrameMatrix out;
  out.utterance_id = features.utterance_id;
  out.frames.resize(num_frames, width * dim);
  for (Eigen::Index l = 0; l < num_frames; ++l) {
    for (Eigen::Index k = 0; k < width; ++k) {
      Eigen::Index src = l + k - half_window;
      src = std::clamp<Eigen::Index>(src, 0, num_frames - 1);
      out.frames.block(l, k * dim, 1, dim) = features.frames.row(src);
    }
  }
  return out;
}

std::vector<FrameMatrix> SplitSegments(const FrameMatrix &features,
                                       int seg_len) {
  if (seg_len < 1) throw InvalidArgument("seg_len must be >= 1");
  std::vector<FrameMatrix> segments;
  const Eigen::Index count = features.NumFrames() / seg_len;
  segments.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) {
    FrameMatrix seg;
    seg.utterance_id = features.utterance_id + "-s" + std::to_string(k);
    seg.frames = features.frames.middleRows(k * seg_len, seg_len);
    segments.push_back(std::move(seg));
  }
  return segments;
}

void CorpusIndex::Add(UtteranceEntry entry) {
  if (entry.utterance_id.empty() || entry.speaker_id.empty())
    throw InvalidArgument("utterance and speaker ids must be non-empty");
  if (utt_pos_.count(entry.utterance_id))
    throw InvalidArgument("duplicate utterance id '" + entry.utterance_id +
                          "'");
  auto it = speaker_pos_.find(entry.speaker_id);
  if (it == speaker_pos_.end()) {
    it = speaker_pos_.emplace(entry.speaker_id, speakers_.size()).first;
    speakers_.push_back(entry.speaker_id);
    counts_.push_back(0);
  }
  ++counts_[it->second];
  utt_pos_.emplace(entry.utterance_id, utts_.size());
  utts_.push_back(std::move(entry));
}

std::size_t CorpusIndex::SpeakerIndex(const std::string &speaker_id) const {
  auto it = speaker_pos_.find(speaker_id);
  if (it == speaker_pos_.end())
    throw InvalidArgument("unknown speaker '" + speaker_id + "'");
  return it->second;
}

std::size_t CorpusIndex::UtteranceCount(const std::string &speaker_id) const {
  return counts_[SpeakerIndex(speaker_id)];
}

const UtteranceEntry &CorpusIndex::Find(const std::string &utterance_id) const {
  auto it = utt_pos_.find(utterance_id);
  if (it == utt_pos_.end())
    throw InvalidArgument("unknown utterance '" + utterance_id + "'");
  return utts_[it->second];
}

CorpusIndex LoadCorpusIndex(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus index " + path);
  CorpusIndex index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    UtteranceEntry entry;
    std::string extra;
    if (!(fields >> entry.utterance_id >> entry.speaker_id >> entry.path) ||
        (fields >> extra)) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected '<utterance_id> <speaker_id> <path>'");
    }
    index.Add(std::move(entry));
  }
  if (index.NumUtterances() == 0)
    throw FormatError(path + ": corpus index is empty");
  return index;
}

void SaveCorpusIndex(const std::string &path, const CorpusIndex &index) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto &u : index.utterances())
    out << u.utterance_id << ' ' << u.speaker_id << ' ' << u.path << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

Corpus LoadCorpus(const std::string &index_path) {
  Corpus corpus;
  corpus.index = LoadCorpusIndex(index_path);
  const fs::path base = fs::path(index_path).parent_path();
  corpus.features.reserve(corpus.index.NumUtterances());
  for (const auto &u : corpus.index.utterances())
    corpus.features.push_back(
        LoadFeatures((base / u.path).string(), u.utterance_id));
  return corpus;
}

void SynthSpec::Validate() const {
  if (n_speakers < 1 || utts_per_speaker < 1 || frames_per_utt < 1 ||
      feature_dim < 1)
    throw InvalidArgument("synth spec: all counts must be >= 1");
  if (!(speaker_spread >= 0) || !(channel_spread >= 0) || !(frame_noise >= 0))
    throw InvalidArgument("synth spec: spreads must be >= 0");
}

namespace {

std::string SpeakerName(int s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03d", s);
  return buf;
}

}  // namespace

Corpus SynthesizeCorpus(const SynthSpec &spec) {
  spec.Validate();
  Rng rng(spec.seed);
  const int dim = spec.feature_dim;
  Corpus corpus;
  corpus.features.reserve(
      static_cast<std::size_t>(spec.n_speakers) * spec.utts_per_speaker);
  for (int s = 0; s < spec.n_speakers; ++s) {
    const std::string speaker = SpeakerName(s);
    Vector mean(dim);
    for (int d = 0; d < dim; ++d) mean(d) = spec.speaker_spread * rng.Normal();
    for (int u = 0; u < spec.utts_per_speaker; ++u) {
      char utt_buf[64];
      std::snprintf(utt_buf, sizeof(utt_buf), "%s-u%02d", speaker.c_str(), u);
      Vector center = mean;
      for (int d = 0; d < dim; ++d)
        center(d) += spec.channel_spread * rng.Normal();
      FrameMatrix fm;
      fm.utterance_id = utt_buf;
      fm.frames.resize(spec.frames_per_utt, dim);
      for (int l = 0; l < spec.frames_per_utt; ++l)
        for (int d = 0; d < dim; ++d)
          fm.frames(l, d) = static_cast<float>(
              center(d) + spec.frame_noise * rng.Normal());
      corpus.index.Add({fm.utterance_id, speaker,
                        "feats/" + fm.utterance_id + ".svf"});
      corpus.features.push_back(std::move(fm));
    }
  }
  return corpus;
}

CorpusIndex WriteSynthCorpus(const SynthSpec &spec,
                             const std::string &out_dir) {
  Corpus corpus = SynthesizeCorpus(spec);
  const fs::path base(out_dir);
  std::error_code ec;
  fs::create_directories(base / "feats", ec);
  if (ec) throw IoError("cannot create " + (base / "feats").string());
  for (std::size_t i = 0; i < corpus.features.size(); ++i)
    SaveFeatures((base / corpus.index.utterances()[i].path).string(),
                 corpus.features[i]);
  SaveCorpusIndex((base / "index.txt").string(), corpus.index);
  return corpus.index;
}

}  // namespace svtk
