"""Down-up Markov chains on leaf-labelled binary trees and their projections."""
