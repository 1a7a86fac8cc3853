// Slow but obviously correct reference implementations.

pub fn mu(mut n: u64) -> i8 {
    assert!(n > 0);
    let mut sign = 1i8;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

pub fn circle(s: f64, t: f64) -> f64 {
    let d = (s - t).rem_euclid(1.0);
    d.min(1.0 - d)
}
