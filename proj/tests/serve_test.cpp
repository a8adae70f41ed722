#include <chrono>
#include <cmath>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include "fovstream/demo.hpp"
#include "fovstream/experiment.hpp"
#include "fovstream/serve.hpp"

namespace fovstream {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;

struct DemoRig {
  std::shared_ptr<const FrameCache> video =
      std::make_shared<const FrameCache>(*make_synthetic({"moving-checker", 192, 108, 30.0, 8, 1}));
  std::vector<FoveationConfig> ladder = desk_ladder(192, 108, Quantizer::from_step(8.0));
  ServerOptions server{reference_geometry(192, 108), 0.25};
  DemoOptions opts{96};

  std::unique_ptr<DemoSession> make() {
    return std::make_unique<DemoSession>(video, ladder, LatencyModel::fvideo(), server, opts);
  }
};

std::vector<std::uint8_t> gaze_bytes(std::uint64_t t, float x, float y) { return serialize_msg(GazeMsg{t, x, y}); }

TEST(DemoSession, CropFollowsGazeWithinTwoFrames) {
  DemoRig rig;
  auto s = rig.make();
  const std::int64_t period = 1'000'000 / 30;
  std::int64_t now = 0;
  s->poll(now);
  const PixelPoint targets[] = {{40, 40}, {150, 70}, {96, 54}};
  for (const PixelPoint& p : targets) {
    s->on_message(gaze_bytes(static_cast<std::uint64_t>(now), float(p.x), float(p.y)), now);
    for (int frame = 0; frame < 2; ++frame) {
      for (std::int64_t t = 0; t < period; t += 1000) s->poll(now + t);
      now += period;
    }
    const auto c = s->crop_center();
    ASSERT_TRUE(c.has_value());
    // The crop is clamped on-frame, so compare with the clamped origin.
    const PixelPoint o = crop_region(p, rig.ladder[0].fg_size, 192, 108);
    EXPECT_NEAR(c->x, o.x + rig.ladder[0].fg_size / 2.0, 1.0);
    EXPECT_NEAR(c->y, o.y + rig.ladder[0].fg_size / 2.0, 1.0);
  }
}

TEST(DemoSession, ConfigEchoedInStats) {
  DemoRig rig;
  auto s = rig.make();
  s->on_message(serialize_msg(ConfigMsg{81.0f, 2}), 0);
  EXPECT_EQ(s->artificial_ms(), 81.0);
  EXPECT_EQ(s->ladder_index(), 2);
  std::optional<StatsMsg> stats;
  for (std::int64_t t = 0; t <= 600'000 && !stats; t += 2000) {
    for (auto& m : s->poll(t)) {
      if (auto* st = std::get_if<StatsMsg>(&m)) stats = *st;
    }
  }
  ASSERT_TRUE(stats);
  EXPECT_EQ(stats->ladder_index, 2);
  EXPECT_NEAR(stats->mtp_ms_est, total_latency_us(LatencyModel::fvideo()) / 1000.0 + 81.0, 1e-3);
}

TEST(DemoSession, ClampsKnobs) {
  DemoRig rig;
  auto s = rig.make();
  s->on_config({500.0f, 200});
  EXPECT_EQ(s->artificial_ms(), 100.0);
  EXPECT_EQ(s->ladder_index(), static_cast<int>(rig.ladder.size()) - 1);
  s->on_config({-3.0f, 0});
  EXPECT_EQ(s->artificial_ms(), 0.0);
  s->on_config({std::nanf(""), 0});
  EXPECT_EQ(s->artificial_ms(), 0.0);
}

TEST(DemoSession, FramesHaveAdvertisedSizeAndRealBits) {
  DemoRig rig;
  auto s = rig.make();
  int frames = 0;
  std::uint64_t bits = 0;
  for (std::int64_t t = 0; t < 500'000; t += 2000) {
    if (t % 20'000 == 0) s->on_message(gaze_bytes(t, 50.0f + t / 10'000, 60.0f), t);
    for (auto& m : s->poll(t)) {
      if (auto* f = std::get_if<FrameMsg>(&m)) {
        ++frames;
        ASSERT_EQ(f->width, 96);
        ASSERT_EQ(f->height, 54);
        ASSERT_EQ(f->rgb.size(), 96u * 54u * 3u);
        bits += f->bits_bg + f->bits_fg;
      }
    }
  }
  // About 30 frames per second, each carrying the encoded-stream bits.
  EXPECT_GE(frames, 13);
  EXPECT_LE(frames, 16);
  EXPECT_GT(bits, 0u);
}

TEST(DemoSession, RejectsServerMessages) {
  DemoRig rig;
  auto s = rig.make();
  EXPECT_THROW(s->on_message(serialize_msg(StatsMsg{}), 0), ProtocolError);
  EXPECT_THROW(s->on_message(std::vector<std::uint8_t>{0x55}, 0), ProtocolError);
}

// Real sockets: a Beast client against the server on an ephemeral port.
class ServeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<DemoServer>(ServeOptions{"127.0.0.1", 0, 2000}, [this] { return rig_.make(); });
    thread_ = std::thread([this] { server_->run(); });
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  std::unique_ptr<websocket::stream<asio::ip::tcp::socket>> connect() {
    auto ws = std::make_unique<websocket::stream<asio::ip::tcp::socket>>(io_);
    ws->next_layer().connect({asio::ip::make_address("127.0.0.1"), server_->port()});
    ws->handshake("127.0.0.1", "/");
    ws->binary(true);
    return ws;
  }

  WireMessage read(websocket::stream<asio::ip::tcp::socket>& ws) {
    beast::flat_buffer buf;
    ws.read(buf);
    const auto d = buf.cdata();
    return deserialize_msg({static_cast<const std::uint8_t*>(d.data()), d.size()});
  }

  DemoRig rig_;
  asio::io_context io_;
  std::unique_ptr<DemoServer> server_;
  std::thread thread_;
};

TEST_F(ServeTest, StreamsFramesAndEchoesConfig) {
  auto ws = connect();
  ws->write(asio::buffer(serialize_msg(ConfigMsg{81.0f, 1})));
  ws->write(asio::buffer(gaze_bytes(0, 100.0f, 50.0f)));
  bool got_frame = false, echoed = false;
  for (int i = 0; i < 200 && !(got_frame && echoed); ++i) {
    const WireMessage m = read(*ws);
    if (auto* f = std::get_if<FrameMsg>(&m)) {
      got_frame = true;
      EXPECT_EQ(f->rgb.size(), std::size_t{f->width} * f->height * 3);
    }
    if (auto* s = std::get_if<StatsMsg>(&m)) {
      echoed = s->ladder_index == 1 && std::abs(s->mtp_ms_est - (total_latency_us(LatencyModel::fvideo()) / 1000.0 + 81.0)) < 1e-3;
    }
  }
  EXPECT_TRUE(got_frame);
  EXPECT_TRUE(echoed);
  ws->close(websocket::close_code::normal);
}

TEST_F(ServeTest, ProtocolViolationClosesSessionAndServerRecovers) {
  {
    auto ws = connect();
    ws->write(asio::buffer(std::vector<std::uint8_t>{0xee, 1, 2}));
    beast::flat_buffer buf;
    beast::error_code ec;
    // Frames may still be in flight; the close frame follows them.
    for (int i = 0; i < 200 && !ec; ++i) {
      ws->read(buf, ec);
      buf.consume(buf.size());
    }
    EXPECT_EQ(ec, websocket::error::closed);
    EXPECT_EQ(ws->reason().code, websocket::close_code::policy_error);
  }
  // Reconnect: a fresh session streams again.
  auto ws = connect();
  bool got_frame = false;
  for (int i = 0; i < 200 && !got_frame; ++i) got_frame = std::holds_alternative<FrameMsg>(read(*ws));
  EXPECT_TRUE(got_frame);
  EXPECT_EQ(server_->sessions_started(), 2);
  ws->close(websocket::close_code::normal);
}

TEST(Serve, PortInUse) {
  DemoRig rig;
  DemoServer first(ServeOptions{"127.0.0.1", 0, 2000}, [&] { return rig.make(); });
  EXPECT_THROW(DemoServer(ServeOptions{"127.0.0.1", first.port(), 2000}, [&] { return rig.make(); }), PortUnavailable);
}

}  // namespace
}  // namespace fovstream
