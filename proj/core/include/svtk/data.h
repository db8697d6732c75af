// svtk/data.h

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

#ifndef SVTK_DATA_H_
#define SVTK_DATA_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "svtk/base.h"

namespace svtk {

// One utterance: L frames (rows) of F-dimensional features (columns).
struct FrameMatrix {
  std::string utterance_id;
  Matrix frames;

  Eigen::Index NumFrames() const { return frames.rows(); }
  Eigen::Index Dim() const { return frames.cols(); }

  // Throws InvalidArgument unless L >= 1, F >= 1 and every entry is finite.
  void Validate() const;
};

// Feature container "SVF1": u32 L, u32 F, then L*F little-endian float32
// values row-major. Values are stored in single precision, so SaveFeatures
// rounds; a loaded matrix re-saves bit-identically.
FrameMatrix LoadFeatures(const std::string &path,
                         const std::string &utterance_id = "");
void SaveFeatures(const std::string &path, const FrameMatrix &features);

// Row l of the result is [z_{l-W}; ...; z_l; ...; z_{l+W}]. Frames outside
// the utterance are replaced by the nearest edge frame, so the output keeps
// L rows and has (2W+1)F columns.
FrameMatrix StackContext(const FrameMatrix &features, int half_window);

// Consecutive non-overlapping segments of exactly seg_len frames; a trailing
// remainder shorter than seg_len is dropped. Segment k of utterance "u" is
// named "u-s<k>".
std::vector<FrameMatrix> SplitSegments(const FrameMatrix &features,
                                       int seg_len);

struct UtteranceEntry {
  std::string utterance_id;
  std::string speaker_id;
  std::string path;  // relative to the index file's directory
};

// Utterance-to-speaker map. Speakers are kept in order of first appearance.
class CorpusIndex {
 public:
  // Throws InvalidArgument on a duplicate utterance id.
  void Add(UtteranceEntry entry);

  const std::vector<UtteranceEntry> &utterances() const { return utts_; }
  const std::vector<std::string> &speakers() const { return speakers_; }

  std::size_t NumSpeakers() const { return speakers_.size(); }
  std::size_t NumUtterances() const { return utts_.size(); }
  // Throws InvalidArgument for an unknown id.
  std::size_t SpeakerIndex(const std::string &speaker_id) const;
  std::size_t UtteranceCount(const std::string &speaker_id) const;
  const UtteranceEntry &Find(const std::string &utterance_id) const;

 private:
  std::vector<UtteranceEntry> utts_;
  std::vector<std::string> speakers_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> speaker_pos_;
  std::unordered_map<std::string, std::size_t> utt_pos_;
};

// Text index: one line per utterance, "<utterance_id> <speaker_id> <path>".
CorpusIndex LoadCorpusIndex(const std::string &path);
void SaveCorpusIndex(const std::string &path, const CorpusIndex &index);

// An index together with its decoded features, parallel to
// index.utterances().
struct Corpus {
  CorpusIndex index;
  std::vector<FrameMatrix> features;
};

// Loads the index and every feature file it names.
Corpus LoadCorpus(const std::string &index_path);

struct SynthSpec {
  int n_speakers = 40;
  int utts_per_speaker = 8;
  int frames_per_utt = 300;
  int feature_dim = 20;
  double speaker_spread = 1.0;
  double channel_spread = 0.5;
  double frame_noise = 1.0;
  std::uint64_t seed = 1;

  void Validate() const;
};

// Speaker-mean + channel-offset + isotropic frame-noise generator. Each
// speaker draws a mean ~ N(0, speaker_spread^2 I), each utterance adds an
// offset ~ N(0, channel_spread^2 I) and each frame adds N(0, frame_noise^2 I).
// Values are rounded to float32 so the in-memory corpus equals what
// WriteSynthCorpus puts on disk. Pure function of the spec.
Corpus SynthesizeCorpus(const SynthSpec &spec);

// Writes SynthesizeCorpus(spec) below out_dir as feats/<utt>.svf plus
// index.txt, and returns the index.
CorpusIndex WriteSynthCorpus(const SynthSpec &spec, const std::string &out_dir);

}  // namespace svtk

#endif  // SVTK_DATA_H_
