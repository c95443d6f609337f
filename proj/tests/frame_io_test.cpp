#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "teamrec/frame.hpp"
#include "teamrec/rng.hpp"
#include "testutil.hpp"

using namespace teamrec;

TEST_CASE("frame construction and validation") {
  Frame f = Frame::make(4, 3, 1, 7);
  REQUIRE(f.data.size() == 12);
  REQUIRE(f.data[5] == 7);

  CHECK_THROWS_AS(Frame::make(0, 3), Error);
  CHECK_THROWS_AS(Frame::make(3, 0), Error);
  CHECK_THROWS_AS(Frame::make(3, 3, 2), Error);
}

TEST_CASE("grayscale uses integer luma weights") {
  Frame f = Frame::make(1, 1, 3);
  f.data = {255, 0, 0};
  CHECK(static_cast<int>(grayscale(f).data[0]) == (77 * 255 + 128) / 256);

  f.data = {10, 20, 30};
  CHECK(static_cast<int>(grayscale(f).data[0]) == (77 * 10 + 150 * 20 + 29 * 30 + 128) / 256);

  // Gray input passes through untouched.
  Frame g = Frame::make(2, 2, 1, 99);
  CHECK(grayscale(g).data == g.data);
}

TEST_CASE("pgm and ppm round-trip bit-exactly") {
  Rng rng(11);
  for (int channels : {1, 3}) {
    Frame f = Frame::make(9, 5, channels);
    for (auto& v : f.data) v = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
    const auto bytes = encode_pnm(f);
    const Frame back = decode_pnm(bytes);
    CHECK(back.width == f.width);
    CHECK(back.height == f.height);
    CHECK(back.channels == f.channels);
    CHECK(back.data == f.data);
    // encode(decode(encode(x))) == encode(x): the byte-level round trip.
    CHECK(encode_pnm(back) == bytes);
  }
}

TEST_CASE("pnm decode rejects malformed input") {
  CHECK_THROWS_AS(decode_pnm({'P', '7', '\n'}), IoError);
  CHECK_THROWS_AS(decode_pnm({}), IoError);
  // Truncated pixel payload.
  auto bytes = encode_pnm(Frame::make(4, 4, 1, 1));
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_pnm(bytes), IoError);
}

TEST_CASE("load_frame_sequence returns frames in index order") {
  testutil::TempDir dir;
  for (int i = 0; i < 3; ++i) {
    Frame f = Frame::make(8, 8, 1, static_cast<std::uint8_t>(i * 10));
    f.index = i;
    save_pnm(f, dir / frame_filename(i));
  }
  const auto frames = load_frame_sequence(dir.path);
  REQUIRE(frames.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(frames[static_cast<std::size_t>(i)].index == i);
    CHECK(frames[static_cast<std::size_t>(i)].data[0] == i * 10);
  }
}

TEST_CASE("load_frame_sequence on an empty directory yields an empty list") {
  testutil::TempDir dir;
  CHECK(load_frame_sequence(dir.path).empty());
}

TEST_CASE("load_frame_sequence rejects mixed dimensions") {
  testutil::TempDir dir;
  save_pnm(Frame::make(4, 4), dir / "frame_000000.pgm");
  save_pnm(Frame::make(8, 8), dir / "frame_000001.pgm");
  CHECK_THROWS_AS(load_frame_sequence(dir.path), IoError);
}

TEST_CASE("frame filenames use zero-padded indices") {
  CHECK(frame_filename(17) == "frame_000017.pgm");
  CHECK(frame_filename(17, 3) == "frame_000017.ppm");
  CHECK(frame_filename(0) == "frame_000000.pgm");
}

TEST_CASE("save then load preserves pixels through the filesystem") {
  testutil::TempDir dir;
  Rng rng(3);
  Frame f = Frame::make(13, 7, 3);
  for (auto& v : f.data) v = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
  f.index = 42;
  const auto p = dir / frame_filename(42, 3);
  save_pnm(f, p);
  const Frame back = load_pnm(p);
  CHECK(back.data == f.data);
  // Second save of the loaded frame is byte-identical to the first file.
  const auto p2 = dir / "copy.ppm";
  save_pnm(back, p2);
  CHECK(testutil::slurp_file(p) == testutil::slurp_file(p2));
}
