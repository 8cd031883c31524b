use crate::operators::grid::ImageGrid;

/// Squared forward-difference gradient norm of the zero-extended image,
/// `sum |D f|^2 h^2`.
pub fn gradient_norm_sq(img: &ImageGrid) -> f64 {
    let (nx, ny) = (img.spec.nx, img.spec.ny);
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            0.0
        } else {
            img.values[j as usize * nx + i as usize]
        }
    };
    let mut acc = 0.0;
    for j in -1..ny as isize {
        for i in -1..nx as isize {
            let v = at(i, j);
            let dx = at(i + 1, j) - v;
            let dy = at(i, j + 1) - v;
            // the padded corner row/column only contributes across the edge
            if j >= 0 {
                acc += dx * dx;
            }
            if i >= 0 {
                acc += dy * dy;
            }
        }
    }
    // |D f|^2 h^2 = sum (diff / h)^2 h^2
    acc
}

/// `sqrt(|f|^2 + |D f|^2)` with forward differences and zero padding.
pub fn h1_norm(img: &ImageGrid) -> f64 {
    let h2 = img.spec.spacing * img.spec.spacing;
    let l2 = h2 * img.values.iter().map(|v| v * v).sum::<f64>();
    (l2 + gradient_norm_sq(img)).sqrt()
}

/// `H^1` Gram operator `f - Laplacian f` matching [`h1_norm`], so that
/// `<f, gram(f)> = h1_norm(f)^2` in the image inner product.
pub fn h1_gram(img: &ImageGrid) -> ImageGrid {
    let (nx, ny) = (img.spec.nx, img.spec.ny);
    let h2 = img.spec.spacing * img.spec.spacing;
    let mut out = img.clone();
    for j in 0..ny {
        for i in 0..nx {
            let v = img.values[j * nx + i];
            let mut nb = 0.0;
            if i > 0 {
                nb += img.values[j * nx + i - 1];
            }
            if i + 1 < nx {
                nb += img.values[j * nx + i + 1];
            }
            if j > 0 {
                nb += img.values[(j - 1) * nx + i];
            }
            if j + 1 < ny {
                nb += img.values[(j + 1) * nx + i];
            }
            out.values[j * nx + i] = v + (4.0 * v - nb) / h2;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::grid::GridSpec;

    #[test]
    fn constant_with_zero_ring() {
        let n = 20;
        let spec = GridSpec::square(n, 1.0, 10.0);
        let c = 1.7;
        let mut img = ImageGrid::zeros(spec);
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                img.values[j * n + i] = c;
            }
        }
        let h = spec.spacing;
        let m = (n - 2) as f64;
        let exact = (h * h * m * m * c * c + 4.0 * m * c * c).sqrt();
        assert!((h1_norm(&img) - exact).abs() < 1e-12 * exact);
        assert_eq!(h1_norm(&ImageGrid::zeros(spec)), 0.0);
    }

    #[test]
    fn gram_matches_norm() {
        let spec = GridSpec::square(16, 1.0, 10.0);
        let f = ImageGrid::from_fn(spec, |x| (3.0 * x[0]).sin() * x[1] + 0.3);
        let a = f.inner(&h1_gram(&f));
        assert!((a - h1_norm(&f).powi(2)).abs() < 1e-10 * a);
        assert!(h1_norm(&f) >= f.norm());
    }
}
