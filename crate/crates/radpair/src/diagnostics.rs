use nalgebra::{Complex, DMatrix};
use radpair_core::C64;

/// Smallest eigenvalue of the Hermitian part of a row-major `dim × dim` matrix.
pub fn min_eigenvalue(rho: &[C64], dim: usize) -> f64 {
    let m = DMatrix::<Complex<f64>>::from_fn(dim, dim, |i, j| {
        let a = rho[i * dim + j];
        let b = rho[j * dim + i].conj();
        Complex::new(0.5 * (a.re + b.re), 0.5 * (a.im + b.im))
    });
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Process CPU time (user + system), seconds.
pub fn cpu_time() -> f64 {
    // SAFETY: getrusage only writes into the struct we pass.
    let usage = unsafe {
        let mut u: libc::rusage = std::mem::zeroed();
        if libc::getrusage(libc::RUSAGE_SELF, &mut u) != 0 {
            return f64::NAN;
        }
        u
    };
    let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 * 1e-6;
    tv(usage.ru_utime) + tv(usage.ru_stime)
}

/// CPU time of the calling thread, seconds.
pub fn thread_cpu_time() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: clock_gettime writes into `ts` only.
    if unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) } != 0 {
        return f64::NAN;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_of_diagonal() {
        let z = C64::new(0.0, 0.0);
        let rho = [C64::new(0.7, 0.0), z, z, C64::new(-0.2, 0.0)];
        assert!((min_eigenvalue(&rho, 2) + 0.2).abs() < 1e-14);
    }

    #[test]
    fn clocks_advance() {
        let a = thread_cpu_time();
        let mut x = 0.0f64;
        for i in 0..2_000_000 {
            x += (i as f64).sqrt();
        }
        assert!(x > 0.0);
        assert!(thread_cpu_time() >= a);
        assert!(cpu_time() > 0.0);
    }
}
