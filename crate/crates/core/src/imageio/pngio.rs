use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

/// Decodes an 8-bit grayscale PNG. Colour, alpha, palette and 16-bit
/// images are rejected rather than converted.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let png_err = |e: png::DecodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("colour type {:?}", info.color_type),
        });
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("bit depth {:?}", info.bit_depth),
        });
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or_else(|| Error::Png {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(frame.buffer_size());
    if frame.line_size != width {
        // Rows are tightly packed for 8-bit grayscale; anything else means
        // the decoder applied a transformation we did not ask for.
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("unexpected line size {}", frame.line_size),
        });
    }
    GrayImage::new(width, height, buf)
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let enc_err = |e: png::EncodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = enc.write_header().map_err(enc_err)?;
    writer.write_image_data(img.pixels()).map_err(enc_err)?;
    writer.finish().map_err(enc_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(path: &Path, w: u32, h: u32, color: png::ColorType, depth: png::BitDepth, data: &[u8]) {
        let file = File::create(path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(data).unwrap();
    }

    #[test]
    fn round_trips_full_frame_and_generator_sizes() {
        let dir = tempfile::tempdir().unwrap();
        for (w, h) in [(640, 480), (512, 512)] {
            let img = GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 256) as u8);
            let p = dir.path().join(format!("{w}x{h}.png"));
            save_image(&img, &p).unwrap();
            let back = load_image(&p).unwrap();
            assert_eq!((back.width(), back.height()), (w, h));
            assert_eq!(back, img);
        }
    }

    #[test]
    fn rejects_rgb_and_sixteen_bit() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = dir.path().join("rgb.png");
        write_png(&rgb, 4, 4, png::ColorType::Rgb, png::BitDepth::Eight, &[10; 48]);
        assert!(matches!(load_image(&rgb), Err(Error::UnsupportedEncoding { .. })));

        let deep = dir.path().join("deep.png");
        write_png(&deep, 4, 4, png::ColorType::Grayscale, png::BitDepth::Sixteen, &[10; 32]);
        assert!(matches!(load_image(&deep), Err(Error::UnsupportedEncoding { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_image("/nonexistent/x.png"), Err(Error::Io { .. })));
    }
}
