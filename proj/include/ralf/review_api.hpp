// Copyright 2026 The RALF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RALF__REVIEW_API_HPP_
#define RALF__REVIEW_API_HPP_

#include "ralf/core.hpp"
#include "ralf/ingest.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace ralf::review
{

inline constexpr std::size_t kMaxLidarPoints = 20000;

struct Response
{
  int status{200};
  nlohmann::json body;
};

/// Transport-independent review endpoints over a dataset directory. Label files are the only
/// state; every request reads them afresh.
class ReviewService
{
public:
  explicit ReviewService(std::filesystem::path dataset_root, IngestOptions options = {});

  /// GET /api/sequences
  Response sequences() const;
  /// GET /api/frame/{seq}/{ts}
  Response frame(const std::string & seq, Timestamp ts) const;
  /// POST /api/frame/{seq}/{ts}/labels; all-or-nothing.
  Response post_labels(const std::string & seq, Timestamp ts, std::string_view body);

  const DatasetManifest & manifest() const { return manifest_; }

private:
  bool has_frame(const std::string & seq, Timestamp ts) const;
  std::shared_ptr<std::mutex> frame_mutex(const std::filesystem::path & file);

  DatasetManifest manifest_;
  IngestOptions options_;
  std::mutex registry_mutex_;
  std::map<std::filesystem::path, std::shared_ptr<std::mutex>> frame_mutexes_;
};

/// HTTP front end on localhost. `ui_dir`, when it exists, is served at `/`.
class ReviewServer
{
public:
  ReviewServer(ReviewService & service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~ReviewServer();
  ReviewServer(const ReviewServer &) = delete;
  ReviewServer & operator=(const ReviewServer &) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string & host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ralf::review

#endif  // RALF__REVIEW_API_HPP_
