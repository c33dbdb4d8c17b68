import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        String line = sc.next();
        char[] chars = line.toCharArray();
        int lo = 0;
        int hi = chars.length - 1;
        while (lo < hi) {
            char c = chars[lo];
            chars[lo] = chars[hi];
            chars[hi] = c;
            lo++;
            hi--;
        }
        System.out.println(new String(chars));
    }
}
