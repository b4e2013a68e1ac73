use std::collections::VecDeque;

use crate::raster::SuperpixelMap;

/// Labels 4-connected runs of equal segment id. Components are numbered in
/// raster order of their first pixel.
pub(crate) fn connected_components(ids: &[u32], height: usize, width: usize) -> (Vec<u32>, Vec<Vec<usize>>) {
    let dims = crate::raster::Dims::new(height, width);
    let mut comp = vec![u32::MAX; ids.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..ids.len() {
        if comp[start] != u32::MAX {
            continue;
        }
        let k = members.len() as u32;
        let mut pixels = vec![start];
        comp[start] = k;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            dims.for_each_neighbor(p, |q| {
                if comp[q] == u32::MAX && ids[q] == ids[start] {
                    comp[q] = k;
                    pixels.push(q);
                    queue.push_back(q);
                }
            });
        }
        members.push(pixels);
    }
    (comp, members)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Splits every segment into its 4-connected components and merges each
/// component smaller than a quarter of the mean segment size into the
/// largest adjacent region. Output ids are renumbered in raster order.
///
/// Small components are visited in raster order of their first pixel; a
/// region stops absorbing once it reaches the size threshold, and ties
/// between equally large neighbours go to the one found first in raster order.
pub fn enforce_connectivity(sp: &SuperpixelMap) -> SuperpixelMap {
    let dims = sp.dims();
    let (comp, mut members) = connected_components(sp.segment_ids(), dims.height, dims.width);
    let count = members.len();
    let min_size = dims.len() as f64 / sp.num_segments() as f64 / 4.0;

    let mut parent: Vec<usize> = (0..count).collect();
    let mut size: Vec<usize> = members.iter().map(Vec::len).collect();
    for k in 0..count {
        let root = find(&mut parent, k);
        if size[root] as f64 >= min_size {
            continue;
        }
        // Neighbouring regions of the whole merged region containing k.
        let mut best: Option<(usize, usize)> = None;
        for &p in &members[root] {
            dims.for_each_neighbor(p, |q| {
                let r = find(&mut parent, comp[q] as usize);
                if r != root {
                    let better = match best {
                        None => true,
                        Some((bs, br)) => size[r] > bs || (size[r] == bs && members[r][0] < members[br][0]),
                    };
                    if better {
                        best = Some((size[r], r));
                    }
                }
            });
        }
        if let Some((_, target)) = best {
            parent[root] = target;
            size[target] += size[root];
            let moved = std::mem::take(&mut members[root]);
            members[target].extend(moved);
            // Keep the first-pixel order used for tie-breaking.
            let first = members[target].iter().copied().min().expect("non-empty");
            let pos = members[target].iter().position(|&p| p == first).expect("present");
            members[target].swap(0, pos);
        }
    }

    let mut new_id = vec![u32::MAX; count];
    let mut next = 0u32;
    let ids: Vec<u32> = comp
        .iter()
        .map(|&k| {
            let r = find(&mut parent, k as usize);
            if new_id[r] == u32::MAX {
                new_id[r] = next;
                next += 1;
            }
            new_id[r]
        })
        .collect();
    SuperpixelMap::new(dims.height, dims.width, ids).expect("merging keeps a contiguous partition")
}
