"""pdqrng - phase-diffusion quantum random number generator simulator"""
