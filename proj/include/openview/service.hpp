#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "openview/corpus.hpp"
#include "openview/refiner.hpp"
#include "openview/review.hpp"

namespace httplib {
class Server;
}

namespace openview {

class Gateway;

struct ServiceOptions {
  std::map<std::string, std::string> tokens;  // bearer token -> reviewer id
  int preview_long_edge = 512;
  std::filesystem::path benchmark_dir = "benchmark";
  AugmentationPolicy augmentation;
  Gateway* grammar = nullptr;  // optional advisory grammar check
  std::string grammar_model = "assistant";
};

// Preview URL for a view; changes whenever the view does.
std::string preview_reference(const std::string& proposal_id, const ViewSpec& view);

// HTTP API over a ReviewStore:
//   GET  /health
//   GET  /panoramas/{id}                 image/png
//   GET  /proposals?status=
//   GET  /proposals/{id}
//   PUT  /proposals/{id}/view            422 on range violations
//   PUT  /proposals/{id}/fields
//   POST /proposals/{id}/verdict         409 on reviewer conflicts
//   GET  /proposals/{id}/preview.png
//   POST /proposals/{id}/grammar         suggestions only, never applied
//   POST /benchmark/assemble
// Every route except /health needs "Authorization: Bearer <token>".
class ReviewService {
 public:
  ReviewService(ReviewStore& store, const CorpusStore& corpus, ServiceOptions opts);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  // Binds to host:port (0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks until stop() is called from another thread or a signal.
  bool serve(const std::string& host, int port);
  void stop();

  // Renders the proposal's current view as PNG bytes, cached per view.
  std::vector<std::uint8_t> preview_png(const std::string& proposal_id);

 private:
  void routes();
  std::shared_ptr<const Panorama> panorama(const std::string& panorama_id);

  ReviewStore& store_;
  const CorpusStore& corpus_;
  ServiceOptions opts_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::mutex cache_mu_;
  std::map<std::string, CorpusRecord> records_;
  std::map<std::string, std::shared_ptr<const Panorama>> panoramas_;
  std::map<std::string, std::vector<std::uint8_t>> previews_;
};

}  // namespace openview
