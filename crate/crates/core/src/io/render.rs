//! PNG rendering of maps and images. Output bytes depend only on the input.

use crate::error::{Error, Result};
use crate::raster::{ClassMap, Dims, LabelMap, RgbImage, SuperpixelMap};

/// Background colour followed by one colour per class, for up to 16 classes.
pub const DEFAULT_PALETTE: [[u8; 3]; 17] = [
    [0, 0, 0],
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [255, 255, 0],
    [0, 255, 255],
    [255, 0, 255],
    [176, 48, 96],
    [46, 139, 87],
    [160, 32, 240],
    [255, 127, 80],
    [127, 255, 212],
    [218, 112, 214],
    [160, 82, 45],
    [127, 255, 0],
    [216, 191, 216],
    [255, 165, 0],
];

/// Class colours only (`DEFAULT_PALETTE` without the background entry).
pub fn default_class_palette() -> &'static [[u8; 3]] {
    &DEFAULT_PALETTE[1..]
}

pub fn encode_png(dims: Dims, rgb: &[u8]) -> Result<Vec<u8>> {
    debug_assert_eq!(rgb.len(), dims.len() * 3);
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, dims.width as u32, dims.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(|e| Error::Encode(e.to_string()))?;
        writer.write_image_data(rgb).map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// Class `i` is drawn with `palette[i - 1]`.
pub fn render_class_map(map: &ClassMap, palette: &[[u8; 3]]) -> Result<Vec<u8>> {
    if palette.len() < map.num_classes() as usize {
        return Err(Error::PaletteTooSmall { needed: map.num_classes() as usize, available: palette.len() });
    }
    let rgb: Vec<u8> = map.classes().iter().flat_map(|&c| palette[c as usize - 1]).collect();
    encode_png(map.dims(), &rgb)
}

/// Ground truth rendering: unlabeled pixels use `palette[0]`, class `i` uses `palette[i]`.
pub fn render_label_map(labels: &LabelMap, palette: &[[u8; 3]]) -> Result<Vec<u8>> {
    if palette.len() <= labels.num_classes() as usize {
        return Err(Error::PaletteTooSmall { needed: labels.num_classes() as usize + 1, available: palette.len() });
    }
    let rgb: Vec<u8> = labels.labels().iter().flat_map(|&l| palette[l as usize]).collect();
    encode_png(labels.dims(), &rgb)
}

pub fn render_rgb(image: &RgbImage) -> Result<Vec<u8>> {
    let rgb: Vec<u8> = image.pixels().iter().flatten().copied().collect();
    encode_png(image.dims(), &rgb)
}

/// Draws segment boundaries over `image`: a pixel is on a boundary when its
/// right or lower neighbour belongs to another segment.
pub fn render_boundaries(image: &RgbImage, sp: &SuperpixelMap, color: [u8; 3]) -> Result<Vec<u8>> {
    let dims = image.dims();
    dims.check("superpixels vs. image", sp.dims())?;
    let ids = sp.segment_ids();
    let mut rgb = Vec::with_capacity(dims.len() * 3);
    for p in 0..dims.len() {
        let (r, c) = dims.coords(p);
        let edge =
            (c + 1 < dims.width && ids[p] != ids[p + 1]) || (r + 1 < dims.height && ids[p] != ids[p + dims.width]);
        rgb.extend_from_slice(&if edge { color } else { image.get(p) });
    }
    encode_png(dims, &rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode(bytes: &[u8]) -> (u32, u32, Vec<u8>) {
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        buf.truncate(info.buffer_size());
        (info.width, info.height, buf)
    }

    #[test]
    fn single_red_pixel() {
        let map = ClassMap::new(1, 1, vec![1], 1).unwrap();
        let png = render_class_map(&map, &[[255, 0, 0]]).unwrap();
        assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
        assert_eq!(decode(&png), (1, 1, vec![255, 0, 0]));
    }

    #[test]
    fn rendering_is_deterministic() {
        let classes: Vec<u16> = (0..64).map(|i| (i % 5 + 1) as u16).collect();
        let map = ClassMap::new(8, 8, classes, 5).unwrap();
        let a = render_class_map(&map, default_class_palette()).unwrap();
        let b = render_class_map(&map, default_class_palette()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sixteen_classes_use_at_most_sixteen_colours() {
        let classes: Vec<u16> = (0..145 * 145).map(|i| (i * 7 % 16 + 1) as u16).collect();
        let map = ClassMap::new(145, 145, classes, 16).unwrap();
        let (_, _, buf) = decode(&render_class_map(&map, default_class_palette()).unwrap());
        let distinct: std::collections::BTreeSet<&[u8]> = buf.chunks(3).collect();
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn palette_too_small() {
        let map = ClassMap::new(1, 2, vec![1, 3], 3).unwrap();
        assert!(matches!(
            render_class_map(&map, &[[0, 0, 0]; 2]).unwrap_err(),
            Error::PaletteTooSmall { needed: 3, available: 2 }
        ));
    }

    #[test]
    fn boundaries_follow_segment_edges() {
        let image = RgbImage::new(2, 2, vec![[10, 10, 10]; 4]).unwrap();
        let sp = SuperpixelMap::new(2, 2, vec![0, 1, 0, 1]).unwrap();
        let (_, _, buf) = decode(&render_boundaries(&image, &sp, [255, 0, 0]).unwrap());
        assert_eq!(buf, vec![255, 0, 0, 10, 10, 10, 255, 0, 0, 10, 10, 10]);
    }
}
